#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "ftlab/labels.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

namespace {

Date d(const char* iso) { return Date::from_iso(iso); }

PriceSeries weekday_series(const std::string& ticker, const char* start_iso,
                           const std::vector<double>& closes) {
    PriceSeries s;
    s.ticker = ticker;
    Date day = d(start_iso);
    for (double c : closes) {
        s.bars.emplace_back(day, c);
        day = day + 1;
        // skip Saturday/Sunday: 1970-01-01 was a Thursday, so days % 7 of
        // 2 and 3 are the weekend
        while ((day.days % 7) == 2 || (day.days % 7) == 3) day = day + 1;
    }
    s.validate();
    return s;
}

}  // namespace

TEST_CASE("twelve buckets, codes skip zero") {
    const auto& buckets = all_buckets();
    REQUIRE(buckets.size() == 12);
    CHECK(buckets.front().label == "D5+");
    CHECK(buckets.front().code == -6);
    CHECK(buckets.back().label == "U5+");
    CHECK(buckets.back().code == 6);
    for (const auto& b : buckets) CHECK(b.code != 0);
}

TEST_CASE("bucket edges") {
    CHECK(bucket_of(0.0).label == "D1");
    CHECK(bucket_of(0.0).code == -1);
    CHECK(bucket_of(0.3).label == "U1");
    CHECK(bucket_of(1.0).label == "U1");
    CHECK(bucket_of(1.0001).label == "U2");
    CHECK(bucket_of(5.0).label == "U5");
    CHECK(bucket_of(5.01).label == "U5+");
    CHECK(bucket_of(-0.2).label == "D1");
    CHECK(bucket_of(-1.0).label == "D2");
    CHECK(bucket_of(-1.5).label == "D2");
    CHECK(bucket_of(-4.5).label == "D5");
    CHECK(bucket_of(-5.0).label == "D5+");
    CHECK(bucket_of(-5.7).label == "D5+");
    CHECK(bucket_of(-5.7).code == -6);
    CHECK(bucket_of(123.0).label == "U5+");
}

TEST_CASE("bucket sweep is total, monotone and code-consistent") {
    int prev_code = -100;
    for (int i = -100; i <= 100; ++i) {
        double r = i / 10.0;
        ReturnBucket b = bucket_of(r);
        CHECK(b.code != 0);
        CHECK(b.code >= -6);
        CHECK(b.code <= 6);
        CHECK(b.code >= prev_code);
        prev_code = b.code;
        CHECK(code_to_bucket(b.code) == b);
    }
}

TEST_CASE("code_to_bucket totalizes") {
    CHECK(code_to_bucket(-6).label == "D5+");
    CHECK(code_to_bucket(6).label == "U5+");
    CHECK(code_to_bucket(0).code == -1);
    CHECK(code_to_bucket(40).code == 6);
    CHECK(code_to_bucket(-40).code == -6);
}

TEST_CASE("next day return anchors to the last trading day") {
    // Thu 2024-02-01 through the following week, weekends skipped
    PriceSeries s = weekday_series("ACME", "2024-02-01", {100, 102, 103, 99});
    // bars: Thu 2/1=100, Fri 2/2=102, Mon 2/5=103, Tue 2/6=99
    CHECK(next_day_return(s, d("2024-02-01")) == doctest::Approx(2.0));
    // Saturday headline anchors back to Friday, next bar is Monday
    CHECK(next_day_return(s, d("2024-02-03")) ==
          doctest::Approx(100.0 * (103.0 - 102.0) / 102.0));
    CHECK(next_day_return(s, d("2024-02-05")) ==
          doctest::Approx(100.0 * (99.0 - 103.0) / 103.0));
}

TEST_CASE("unlabelable headlines carry a reason") {
    PriceSeries s;
    s.ticker = "GAP";
    s.bars = {{d("2024-01-02"), 10.0}, {d("2024-01-20"), 11.0}, {d("2024-01-21"), 12.0}};
    // date before the series
    CHECK_THROWS_AS(next_day_return(s, d("2023-12-25")), UnlabelableError);
    // anchored at 01-02 but the next bar is 18 calendar days out
    try {
        next_day_return(s, d("2024-01-03"));
        FAIL("expected UnlabelableError");
    } catch (const UnlabelableError& e) {
        CHECK(e.reason == SkipReason::kPriceGap);
    }
    // no bar after the last one
    try {
        next_day_return(s, d("2024-01-21"));
        FAIL("expected UnlabelableError");
    } catch (const UnlabelableError& e) {
        CHECK(e.reason == SkipReason::kOutOfRange);
    }
}

TEST_CASE("price series validation") {
    PriceSeries s;
    s.ticker = "BAD";
    s.bars = {{d("2024-01-02"), 10.0}, {d("2024-01-02"), 11.0}};
    CHECK_THROWS_AS(s.validate(), ContractError);
    s.bars = {{d("2024-01-02"), -1.0}};
    CHECK_THROWS_AS(s.validate(), ContractError);
}

TEST_CASE("dataset join accounts for every headline") {
    auto source = CsvPriceSource::from_rows({
        {"ACME", d("2024-02-01"), 100.0},
        {"ACME", d("2024-02-02"), 104.0},
        {"ACME", d("2024-02-05"), 98.0},
    });
    std::vector<Headline> heads{
        {"acme beats estimates", "ACME", d("2024-02-01")},
        {"mystery co files", "NOPE", d("2024-02-01")},
        {"acme after the last bar", "ACME", d("2024-02-05")},
    };
    LabeledDataset out = build_labeled_dataset(heads, source);
    REQUIRE(out.examples.size() == 1);
    CHECK(out.examples[0].return_pct == doctest::Approx(4.0));
    CHECK(out.examples[0].bucket.label == "U4");
    CHECK(out.skips.total() == 2);
    CHECK(out.skips.counts.at(SkipReason::kUnknownTicker) == 1);
    CHECK(out.skips.counts.at(SkipReason::kOutOfRange) == 1);
    CHECK(out.examples.size() + static_cast<std::size_t>(out.skips.total()) == heads.size());
}

TEST_CASE("headline csv reader handles extra columns and quoting") {
    fs::path p = fs::temp_directory_path() / ("ftlab-heads-" + std::to_string(::getpid()) + ".csv");
    write_text_file(p.string(),
                    "id,headline,ticker,date\n"
                    "1,\"Acme, Inc. surges\",ACME,2024-02-01\n"
                    "2,plain line,BETA,2024-02-02\n");
    auto heads = read_headlines_csv(p.string());
    fs::remove(p);
    REQUIRE(heads.size() == 2);
    CHECK(heads[0].text == "Acme, Inc. surges");
    CHECK(heads[0].ticker == "ACME");
    CHECK(heads[1].date.to_iso() == "2024-02-02");
}

TEST_CASE("labeled csv round trips") {
    auto source = CsvPriceSource::from_rows({
        {"ACME", d("2024-02-01"), 100.0},
        {"ACME", d("2024-02-02"), 104.0},
    });
    std::vector<Headline> heads{{"up day", "ACME", d("2024-02-01")}};
    LabeledDataset out = build_labeled_dataset(heads, source);
    fs::path p = fs::temp_directory_path() / ("ftlab-labeled-" + std::to_string(::getpid()) + ".csv");
    write_labeled_csv(out, p.string());
    auto rows = read_csv_file(p.string());
    fs::remove(p);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"headline", "ticker", "date", "return_pct",
                                              "bucket", "code"});
    CHECK(rows[1][0] == "up day");
    CHECK(rows[1][4] == "U4");
    CHECK(rows[1][5] == "4");
}

TEST_CASE("csv price fixture file") {
    fs::path p = fs::temp_directory_path() / ("ftlab-prices-" + std::to_string(::getpid()) + ".csv");
    write_text_file(p.string(),
                    "ticker,date,adj_close\n"
                    "ACME,2024-02-01,100\n"
                    "ACME,2024-02-02,101.5\n"
                    "BETA,2024-02-01,55\n");
    CsvPriceSource source = CsvPriceSource::from_file(p.string());
    fs::remove(p);
    const PriceSeries* acme = source.series("ACME");
    REQUIRE(acme != nullptr);
    CHECK(acme->bars.size() == 2);
    CHECK(acme->bars[1].second == doctest::Approx(101.5));
    CHECK(source.series("MISSING") == nullptr);
}
