#include "ftlab/labels.hpp"

#include <algorithm>
#include <cmath>
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

namespace ftlab {

using json = nlohmann::json;

void PriceSeries::validate() const {
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (bars[i].second <= 0.0)
            throw ContractError("price series " + ticker + ": non-positive price at " +
                                bars[i].first.to_iso());
        if (i > 0 && !(bars[i - 1].first < bars[i].first))
            throw ContractError("price series " + ticker + ": dates not strictly increasing at " +
                                bars[i].first.to_iso());
    }
}

const std::vector<ReturnBucket>& all_buckets() {
    static const std::vector<ReturnBucket> kBuckets = {
        {"D5+", -6}, {"D5", -5}, {"D4", -4}, {"D3", -3}, {"D2", -2}, {"D1", -1},
        {"U1", +1},  {"U2", +2}, {"U3", +3}, {"U4", +4}, {"U5", +5}, {"U5+", +6}};
    return kBuckets;
}

ReturnBucket bucket_of(double return_pct) {
    if (!std::isfinite(return_pct))
        throw ContractError("bucket_of: non-finite return");
    int code;
    if (return_pct > 0.0) {
        if (return_pct > 5.0)
            code = 6;
        else
            code = static_cast<int>(std::ceil(return_pct));  // Uk covers (k-1, k]
    } else {
        double mag = -return_pct;
        if (mag >= 5.0)
            code = -6;
        else
            code = -(static_cast<int>(std::floor(mag)) + 1);  // Dk covers (-k, -k+1]
    }
    return code_to_bucket(code);
}

ReturnBucket code_to_bucket(int code) {
    int c = std::clamp(code, -6, 6);
    if (c == 0) c = -1;
    for (const ReturnBucket& b : all_buckets())
        if (b.code == c) return b;
    throw ContractError("unreachable: bucket code " + std::to_string(c));
}

std::string skip_reason_name(SkipReason r) {
    switch (r) {
        case SkipReason::kUnknownTicker: return "unknown_ticker";
        case SkipReason::kPriceGap: return "price_gap";
        case SkipReason::kOutOfRange: return "out_of_range";
    }
    return "unknown";
}

double next_day_return(const PriceSeries& series, const Date& date) {
    if (series.bars.empty())
        throw UnlabelableError(SkipReason::kUnknownTicker,
                               "empty price series for " + series.ticker);
    // t0 = last trading date <= date
    auto it = std::upper_bound(series.bars.begin(), series.bars.end(), date,
                               [](const Date& d, const auto& bar) { return d < bar.first; });
    if (it == series.bars.begin())
        throw UnlabelableError(SkipReason::kOutOfRange,
                               series.ticker + ": no trading day on or before " + date.to_iso());
    auto t0 = std::prev(it);
    if (it == series.bars.end())
        throw UnlabelableError(SkipReason::kOutOfRange,
                               series.ticker + ": " + date.to_iso() + " is beyond the series end");
    if (it->first - t0->first > 5)
        throw UnlabelableError(SkipReason::kPriceGap,
                               series.ticker + ": gap of " + std::to_string(it->first - t0->first) +
                                   " calendar days after " + t0->first.to_iso());
    return 100.0 * (it->second - t0->second) / t0->second;
}

int SkipReport::total() const {
    int n = 0;
    for (const auto& [reason, count] : counts) n += count;
    return n;
}

LabeledDataset build_labeled_dataset(const std::vector<Headline>& headlines,
                                     PriceSource& prices) {
    LabeledDataset out;
    for (const Headline& h : headlines) {
        const PriceSeries* series = prices.series(h.ticker);
        if (!series) {
            out.skips.counts[SkipReason::kUnknownTicker]++;
            out.skips.rows.emplace_back(h.text, SkipReason::kUnknownTicker);
            continue;
        }
        try {
            double r = next_day_return(*series, h.date);
            out.examples.push_back(LabeledHeadline{h, r, bucket_of(r)});
        } catch (const UnlabelableError& e) {
            out.skips.counts[e.reason]++;
            out.skips.rows.emplace_back(h.text, e.reason);
        }
    }
    return out;
}

CsvPriceSource CsvPriceSource::from_file(const std::string& path) {
    auto rows = read_csv_file(path);
    if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "ticker" || rows[0][1] != "date" ||
        rows[0][2] != "adj_close")
        throw ParseError("price fixture CSV must start with header 'ticker,date,adj_close': " +
                         path);
    std::vector<std::tuple<std::string, Date, double>> parsed;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 3)
            throw ParseError(path + " row " + std::to_string(i + 1) + ": expected 3 columns");
        parsed.emplace_back(rows[i][0], Date::from_iso(rows[i][1]), std::stod(rows[i][2]));
    }
    return from_rows(parsed);
}

CsvPriceSource CsvPriceSource::from_rows(
    const std::vector<std::tuple<std::string, Date, double>>& rows) {
    CsvPriceSource src;
    for (const auto& [ticker, date, price] : rows) {
        PriceSeries& s = src.by_ticker_[ticker];
        s.ticker = ticker;
        s.bars.emplace_back(date, price);
    }
    for (auto& [ticker, s] : src.by_ticker_) {
        std::sort(s.bars.begin(), s.bars.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        s.validate();
    }
    return src;
}

const PriceSeries* CsvPriceSource::series(const std::string& ticker) {
    auto it = by_ticker_.find(ticker);
    return it == by_ticker_.end() ? nullptr : &it->second;
}

HttpPriceSource::HttpPriceSource(std::string base_url, Date start, Date end, int retry_base_ms)
    : base_url_(std::move(base_url)), start_(start), end_(end), retry_base_ms_(retry_base_ms) {}

const PriceSeries* HttpPriceSource::series(const std::string& ticker) {
    if (auto it = cache_.find(ticker); it != cache_.end()) return &it->second;
    if (known_missing_.count(ticker)) return nullptr;

    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    httplib::Headers headers;
    if (const char* token = std::getenv("PRICE_API_TOKEN"))
        headers.emplace("Authorization", std::string("Bearer ") + token);

    std::string path = "/daily?ticker=" + ticker + "&start=" + start_.to_iso() +
                       "&end=" + end_.to_iso();
    constexpr int kMaxRetries = 3;
    std::string last_error;
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(retry_base_ms_ * (1 << (attempt - 1))));
        auto res = client.Get(path, headers);
        if (!res) {
            last_error = "transport failure";
            continue;
        }
        if (res->status == 404) {
            known_missing_[ticker] = true;
            return nullptr;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        json body;
        try {
            body = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ParseError("price backend returned malformed JSON for " + ticker + ": " +
                             e.what());
        }
        PriceSeries s;
        s.ticker = ticker;
        for (const json& bar : body) {
            s.bars.emplace_back(Date::from_iso(bar.at("date").get<std::string>()),
                                bar.at("adjClose").get<double>());
        }
        std::sort(s.bars.begin(), s.bars.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        s.validate();
        auto [it, inserted] = cache_.emplace(ticker, std::move(s));
        return &it->second;
    }
    throw IoError("price backend unreachable after " + std::to_string(kMaxRetries) +
                  " retries (" + last_error + "): " + base_url_ + path);
}

std::vector<Headline> read_headlines_csv(const std::string& path) {
    auto rows = read_csv_file(path);
    if (rows.empty()) throw ParseError("headlines CSV is empty: " + path);
    int col_headline = -1, col_ticker = -1, col_date = -1;
    for (std::size_t j = 0; j < rows[0].size(); ++j) {
        if (rows[0][j] == "headline") col_headline = static_cast<int>(j);
        else if (rows[0][j] == "ticker") col_ticker = static_cast<int>(j);
        else if (rows[0][j] == "date") col_date = static_cast<int>(j);
    }
    if (col_headline < 0 || col_ticker < 0 || col_date < 0)
        throw ParseError("headlines CSV needs headline, ticker and date columns: " + path);
    std::vector<Headline> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::size_t need = static_cast<std::size_t>(
            std::max({col_headline, col_ticker, col_date})) + 1;
        if (row.size() < need)
            throw ParseError(path + " row " + std::to_string(i + 1) + ": too few columns");
        Headline h;
        h.text = row[static_cast<std::size_t>(col_headline)];
        h.ticker = row[static_cast<std::size_t>(col_ticker)];
        if (h.text.empty() || h.ticker.empty())
            throw ParseError(path + " row " + std::to_string(i + 1) +
                             ": empty headline or ticker");
        h.date = Date::from_iso(row[static_cast<std::size_t>(col_date)]);
        out.push_back(std::move(h));
    }
    return out;
}

void write_labeled_csv(const LabeledDataset& dataset, const std::string& path) {
    std::ostringstream os;
    os << "headline,ticker,date,return_pct,bucket,code\n";
    for (const LabeledHeadline& ex : dataset.examples) {
        os << csv_escape(ex.headline.text) << ',' << csv_escape(ex.headline.ticker) << ','
           << ex.headline.date.to_iso() << ',' << ex.return_pct << ',' << ex.bucket.label << ','
           << ex.bucket.code << '\n';
    }
    write_text_file(path, os.str());
}

}  // namespace ftlab
