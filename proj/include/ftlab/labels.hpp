#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/util.hpp"

namespace ftlab {

struct Headline {
    std::string text;
    std::string ticker;
    Date date;
};

/// Daily adjusted-close series for one ticker; dates strictly
/// increasing, prices positive.
struct PriceSeries {
    std::string ticker;
    std::vector<std::pair<Date, double>> bars;

    void validate() const;
};

/// The 12 ordinal return buckets D5+..D1, U1..U5+ with integer codes
/// -6..-1, +1..+6 (no zero).
struct ReturnBucket {
    std::string label;
    int code = 0;

    bool operator==(const ReturnBucket&) const = default;
};

/// Half-open edges, centralized here: Uk covers (k-1, k] for k=1..5 and
/// U5+ covers (5, inf); D1 covers (-1, 0] (zero lands on the down side),
/// Dk covers (-k, -k+1], D5+ covers (-inf, -5].
ReturnBucket bucket_of(double return_pct);

/// Inverse of the code mapping, totalized by clamping to [-6, 6]; 0
/// resolves to -1, matching bucket_of(0).
ReturnBucket code_to_bucket(int code);

const std::vector<ReturnBucket>& all_buckets();

enum class SkipReason { kUnknownTicker, kPriceGap, kOutOfRange };
std::string skip_reason_name(SkipReason r);

/// Percent change from the last trading day <= date to the next trading
/// day, provided the gap is at most 5 calendar days. Throws
/// UnlabelableError otherwise.
struct UnlabelableError : Error {
    SkipReason reason;
    UnlabelableError(SkipReason r, const std::string& msg) : Error(msg), reason(r) {}
};

double next_day_return(const PriceSeries& series, const Date& date);

struct LabeledHeadline {
    Headline headline;
    double return_pct = 0.0;
    ReturnBucket bucket;
};

/// Abstract daily-bar lookup so fixtures and an HTTP service share one
/// joining path.
class PriceSource {
public:
    virtual ~PriceSource() = default;
    /// nullptr when the ticker is unknown.
    virtual const PriceSeries* series(const std::string& ticker) = 0;
};

/// In-memory source backed by a CSV of ticker,date,adj_close rows.
class CsvPriceSource : public PriceSource {
public:
    static CsvPriceSource from_file(const std::string& path);
    static CsvPriceSource from_rows(
        const std::vector<std::tuple<std::string, Date, double>>& rows);

    const PriceSeries* series(const std::string& ticker) override;

private:
    std::map<std::string, PriceSeries> by_ticker_;
};

/// Daily bars over HTTP: GET <base>/daily?ticker=T&start=D1&end=D2
/// returning a JSON array of {date, adjClose}; bearer token from
/// PRICE_API_TOKEN; exponential backoff with at most 3 retries.
class HttpPriceSource : public PriceSource {
public:
    explicit HttpPriceSource(std::string base_url, Date start, Date end,
                             int retry_base_ms = 100);

    const PriceSeries* series(const std::string& ticker) override;

private:
    std::string base_url_;
    Date start_, end_;
    int retry_base_ms_;
    std::map<std::string, PriceSeries> cache_;
    std::map<std::string, bool> known_missing_;
};

struct SkipReport {
    std::map<SkipReason, int> counts;
    std::vector<std::pair<std::string, SkipReason>> rows;  // headline text -> reason

    int total() const;
};

struct LabeledDataset {
    std::vector<LabeledHeadline> examples;
    SkipReport skips;
};

/// One labeled example per labelable headline, output order = input
/// order; every input either lands in examples or in the skip report.
LabeledDataset build_labeled_dataset(const std::vector<Headline>& headlines,
                                     PriceSource& prices);

/// Headlines CSV: header row with at least headline,ticker,date columns
/// (extra columns ignored).
std::vector<Headline> read_headlines_csv(const std::string& path);

void write_labeled_csv(const LabeledDataset& dataset, const std::string& path);

}  // namespace ftlab
