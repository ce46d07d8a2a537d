#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ftlab/tokenizer.hpp"
#include "ftlab/util.hpp"

namespace ftlab {

struct Article {
    std::string source_id;  // path relative to the corpus root, '/' separators
    std::string text;
    std::optional<Date> date;
};

/// Fixed-length training example: chunk_len token ids plus the source
/// articles the span covers.
struct TokenChunk {
    std::vector<int> ids;
    std::vector<std::string> provenance;
};

struct CorpusLoadReport {
    std::vector<std::string> unreadable;  // skipped with a warning
    int duplicates_dropped = 0;
};

/// Recursive .txt discovery under `directory`, lexicographic by relative
/// path; exact-duplicate texts keep the first occurrence. Reads an
/// optional `manifest.csv` sidecar (header `path,date`) for article
/// dates. Empty corpus is a hard error.
std::vector<Article> load_corpus(const std::string& directory,
                                 CorpusLoadReport* report = nullptr);

/// Articles joined with one eos token after each, then cut into
/// consecutive non-overlapping chunks; the final partial chunk is
/// dropped.
std::vector<TokenChunk> build_chunks(const std::vector<Article>& articles,
                                     const ByteTokenizer& tokenizer, int chunk_len = 512);

struct SplitResult {
    std::vector<Article> train;
    std::vector<Article> test;
};

/// Deterministic split: articles ordered by fnv1a64(source_id) (ties by
/// id), the first round(n * test_fraction) of that ordering go to test.
SplitResult split_corpus(const std::vector<Article>& articles, double test_fraction);

/// Date split: dated >= cutoff goes to test. Undated articles are an
/// error (all of them are listed); an empty train partition is a hard
/// error since training would be impossible.
SplitResult split_corpus(const std::vector<Article>& articles, const Date& cutoff);

}  // namespace ftlab
