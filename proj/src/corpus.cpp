#include "ftlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

namespace fs = std::filesystem;

namespace ftlab {

std::vector<Article> load_corpus(const std::string& directory, CorpusLoadReport* report) {
    fs::path root(directory);
    if (!fs::is_directory(root)) throw IoError("corpus directory does not exist: " + directory);

    std::map<std::string, Date> manifest;
    fs::path manifest_path = root / "manifest.csv";
    if (fs::exists(manifest_path)) {
        auto rows = read_csv_file(manifest_path.string());
        if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "path" || rows[0][1] != "date")
            throw ParseError("manifest.csv must start with header 'path,date'");
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 2)
                throw ParseError("manifest.csv row " + std::to_string(i + 1) + " has no date");
            manifest[rows[i][0]] = Date::from_iso(rows[i][1]);
        }
    }

    std::vector<std::string> rel_paths;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        rel_paths.push_back(entry.path().lexically_relative(root).generic_string());
    }
    std::sort(rel_paths.begin(), rel_paths.end());

    std::vector<Article> out;
    std::set<std::string> seen_texts;
    for (const std::string& rel : rel_paths) {
        std::string text;
        try {
            text = read_text_file((root / rel).string());
        } catch (const IoError&) {
            std::cerr << "warning: skipping unreadable file " << rel << "\n";
            if (report) report->unreadable.push_back(rel);
            continue;
        }
        if (trim(text).empty()) {
            std::cerr << "warning: skipping empty file " << rel << "\n";
            if (report) report->unreadable.push_back(rel);
            continue;
        }
        if (!seen_texts.insert(text).second) {
            if (report) ++report->duplicates_dropped;
            continue;
        }
        Article a;
        a.source_id = rel;
        a.text = std::move(text);
        if (auto it = manifest.find(rel); it != manifest.end()) a.date = it->second;
        out.push_back(std::move(a));
    }
    if (out.empty()) throw ContractError("corpus is empty: no usable .txt files under " + directory);
    return out;
}

std::vector<TokenChunk> build_chunks(const std::vector<Article>& articles,
                                     const ByteTokenizer& tokenizer, int chunk_len) {
    if (chunk_len < 2) throw ContractError("chunk_len must be >= 2");
    std::vector<int> stream;
    std::vector<std::pair<std::size_t, std::string>> spans;  // (end offset, article id)
    for (const Article& a : articles) {
        std::vector<int> ids = tokenizer.encode(a.text);
        stream.insert(stream.end(), ids.begin(), ids.end());
        stream.push_back(ByteTokenizer::kEos);
        spans.emplace_back(stream.size(), a.source_id);
    }
    if (stream.size() < static_cast<std::size_t>(chunk_len))
        throw ContractError("corpus too small: " + std::to_string(stream.size()) +
                            " tokens, need at least " + std::to_string(chunk_len));

    std::vector<TokenChunk> chunks;
    std::size_t count = stream.size() / static_cast<std::size_t>(chunk_len);
    std::size_t span_i = 0;
    for (std::size_t c = 0; c < count; ++c) {
        TokenChunk chunk;
        std::size_t begin = c * static_cast<std::size_t>(chunk_len);
        std::size_t end = begin + static_cast<std::size_t>(chunk_len);
        chunk.ids.assign(stream.begin() + static_cast<std::ptrdiff_t>(begin),
                         stream.begin() + static_cast<std::ptrdiff_t>(end));
        while (span_i < spans.size() && spans[span_i].first <= begin) ++span_i;
        for (std::size_t s = span_i; s < spans.size(); ++s) {
            std::size_t article_begin = s == 0 ? 0 : spans[s - 1].first;
            if (article_begin >= end) break;
            chunk.provenance.push_back(spans[s].second);
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

SplitResult split_corpus(const std::vector<Article>& articles, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ContractError("test_fraction must be in (0, 1)");
    std::vector<std::size_t> order(articles.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        uint64_t ha = fnv1a64(articles[a].source_id);
        uint64_t hb = fnv1a64(articles[b].source_id);
        if (ha != hb) return ha < hb;
        return articles[a].source_id < articles[b].source_id;
    });
    std::size_t test_count = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(articles.size())));
    test_count = std::min(test_count, articles.size() - 1);
    if (test_count == 0) test_count = 1;

    std::set<std::size_t> test_set(order.begin(),
                                   order.begin() + static_cast<std::ptrdiff_t>(test_count));
    SplitResult out;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        (test_set.count(i) ? out.test : out.train).push_back(articles[i]);
    }
    return out;
}

SplitResult split_corpus(const std::vector<Article>& articles, const Date& cutoff) {
    std::vector<std::string> undated;
    for (const Article& a : articles)
        if (!a.date) undated.push_back(a.source_id);
    if (!undated.empty()) {
        std::string msg = "date split requires dates for every article; missing:";
        for (const std::string& id : undated) msg += " " + id;
        throw ContractError(msg);
    }
    SplitResult out;
    for (const Article& a : articles) (*a.date >= cutoff ? out.test : out.train).push_back(a);
    if (out.train.empty())
        throw ContractError("date cutoff " + cutoff.to_iso() +
                            " leaves the training partition empty");
    return out;
}

}  // namespace ftlab
