#include "opspam/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "opspam/io.hpp"
#include "opspam/kernels.hpp"

namespace opspam {

FeatureSpace FeatureSpace::from_names(const std::string& block_name,
                                      std::vector<std::string> names) {
    FeatureSpace s;
    s.names_ = std::move(names);
    for (std::uint32_t i = 0; i < s.names_.size(); ++i) {
        if (!s.index_.emplace(s.names_[i], i).second)
            throw Error("feature space: duplicate feature name \"" + s.names_[i] + "\"");
    }
    s.blocks_.push_back({block_name, 0, static_cast<std::uint32_t>(s.names_.size())});
    return s;
}

FeatureSpace FeatureSpace::concat(const std::vector<const FeatureSpace*>& parts) {
    FeatureSpace s;
    std::uint32_t offset = 0;
    for (const FeatureSpace* part : parts) {
        for (const Block& b : part->blocks_) {
            s.blocks_.push_back({b.name, b.begin + offset, b.end + offset});
        }
        for (std::uint32_t i = 0; i < part->names_.size(); ++i) {
            std::string n = part->names_[i];
            if (s.index_.count(n)) {
                // same surface form in two blocks (a lexicon category named
                // like a word): qualify the later one with its block name
                for (const Block& b : part->blocks_)
                    if (i >= b.begin && i < b.end) n += "_" + b.name;
            }
            if (!s.index_.emplace(n, static_cast<std::uint32_t>(s.names_.size())).second)
                throw Error("feature space concat: duplicate feature name \"" + n + "\"");
            s.names_.push_back(n);
        }
        offset += part->size();
    }
    // block names must be unique for slicing
    for (std::size_t i = 0; i < s.blocks_.size(); ++i)
        for (std::size_t j = i + 1; j < s.blocks_.size(); ++j)
            if (s.blocks_[i].name == s.blocks_[j].name)
                throw Error("feature space concat: duplicate block name \"" + s.blocks_[i].name +
                            "\"");
    return s;
}

std::int64_t FeatureSpace::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

const FeatureSpace::Block& FeatureSpace::block(std::string_view name) const {
    for (const Block& b : blocks_)
        if (b.name == name) return b;
    throw Error("feature space: no block named \"" + std::string(name) + "\"");
}

std::uint64_t FeatureSpace::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Block& b : blocks_) {
        h = fnv1a(b.name, h);
        h = fnv1a(std::to_string(b.begin) + ":" + std::to_string(b.end), h);
    }
    for (const std::string& n : names_) {
        h = fnv1a(n, h);
        h = fnv1a("\n", h);
    }
    return h;
}

FeatureSpace FeatureSpace::from_dump(std::string_view text, std::string_view source_name) {
    FeatureSpace s;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string where = std::string(source_name) + ":" + std::to_string(line_no);
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw Error(where + ": expected index<TAB>block<TAB>name");
        std::uint32_t index = static_cast<std::uint32_t>(std::stoul(line.substr(0, t1)));
        std::string block = line.substr(t1 + 1, t2 - t1 - 1);
        std::string name = line.substr(t2 + 1);
        if (index != s.names_.size()) throw Error(where + ": indices must be dense and in order");
        if (!s.index_.emplace(name, index).second)
            throw Error(where + ": duplicate feature name \"" + name + "\"");
        s.names_.push_back(std::move(name));
        if (s.blocks_.empty() || s.blocks_.back().name != block)
            s.blocks_.push_back({block, index, index + 1});
        else
            s.blocks_.back().end = index + 1;
    }
    if (s.names_.empty()) throw Error(std::string(source_name) + ": empty feature-space dump");
    return s;
}

std::string FeatureSpace::dump() const {
    std::ostringstream os;
    for (std::uint32_t i = 0; i < names_.size(); ++i) {
        const Block* owner = nullptr;
        for (const Block& b : blocks_)
            if (i >= b.begin && i < b.end) owner = &b;
        os << i << '\t' << (owner ? owner->name : "?") << '\t' << names_[i] << '\n';
    }
    return os.str();
}

double SparseVector::l2_norm() const {
    return std::sqrt(kernels::active().l2_norm_sq(val.data(), val.size()));
}

bool SparseVector::normalize() {
    double norm = l2_norm();
    if (norm <= 0.0) return false;
    kernels::active().scale(val.data(), val.size(), 1.0 / norm);
    unit_normalized = true;
    return true;
}

void SparseVector::set(std::uint32_t i, double v) {
    if (v == 0.0) return;
    auto pos = std::lower_bound(idx.begin(), idx.end(), i);
    if (pos != idx.end() && *pos == i) {
        val[static_cast<std::size_t>(pos - idx.begin())] = v;
        return;
    }
    std::size_t at = static_cast<std::size_t>(pos - idx.begin());
    idx.insert(pos, i);
    val.insert(val.begin() + static_cast<std::ptrdiff_t>(at), v);
}

double SparseVector::dot(const SparseVector& other) const {
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < idx.size() && j < other.idx.size()) {
        if (idx[i] == other.idx[j]) {
            acc += val[i] * other.val[j];
            ++i;
            ++j;
        } else if (idx[i] < other.idx[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return acc;
}

FeatureSpace build_ngram_space(const std::vector<TokenSeq>& train_docs, int max_order,
                               std::uint64_t min_count) {
    if (max_order < 1) throw Error("build_ngram_space: max_order must be >= 1");
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const TokenSeq& d : train_docs)
        for (int n = 1; n <= max_order; ++n)
            for (std::string& g : ngrams(d, n, false)) ++freq[std::move(g)];
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [name, count] : freq)
        if (count >= min_count) kept.emplace_back(name, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> names;
    names.reserve(kept.size());
    for (auto& [name, count] : kept) names.push_back(std::move(name));
    return FeatureSpace::from_names("ngram", std::move(names));
}

SparseVector ngram_vector(const TokenSeq& seq, const FeatureSpace& space, int max_order,
                          bool normalize) {
    std::unordered_map<std::uint32_t, double> counts;
    for (int n = 1; n <= max_order; ++n) {
        for (const std::string& g : ngrams(seq, n, false)) {
            std::int64_t id = space.index_of(g);
            if (id >= 0) counts[static_cast<std::uint32_t>(id)] += 1.0;
        }
    }
    SparseVector v;
    v.space_hash = space.hash();
    v.idx.reserve(counts.size());
    for (const auto& [i, c] : counts) v.idx.push_back(i);
    std::sort(v.idx.begin(), v.idx.end());
    v.val.reserve(counts.size());
    for (std::uint32_t i : v.idx) v.val.push_back(counts[i]);
    if (normalize) v.normalize();
    return v;
}

const std::vector<std::string>& penn_treebank_tags() {
    static const std::vector<std::string> tags = {
        "CC",  "CD",  "DT",   "EX",   "FW",  "IN",  "JJ",   "JJR", "JJS", "LS",
        "MD",  "NN",  "NNS",  "NNP",  "NNPS", "PDT", "POS",  "PRP", "PRP$", "RB",
        "RBR", "RBS", "RP",   "SYM",  "TO",  "UH",  "VB",   "VBD", "VBG", "VBN",
        "VBP", "VBZ", "WDT",  "WP",   "WP$", "WRB", "#",    "$",   ".",   ",",
        ":",   "(",   ")",    "``",   "''",
    };
    return tags;
}

std::vector<TaggedSeq> load_tagged_file(const std::filesystem::path& path,
                                        const std::vector<std::string>& tagset) {
    std::string text = slurp_file(path);
    std::vector<TaggedSeq> docs;
    TaggedSeq current;
    std::size_t line_no = 0;
    std::istringstream in(text);
    std::string line;
    auto flush = [&] {
        if (!current.pairs.empty()) {
            current.source_id = "doc" + std::to_string(docs.size());
            docs.push_back(std::move(current));
            current = TaggedSeq{};
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(path.string() + ":" + std::to_string(line_no) +
                        ": expected token<TAB>TAG");
        std::string token = line.substr(0, tab);
        std::string tag = line.substr(tab + 1);
        if (std::find(tagset.begin(), tagset.end(), tag) == tagset.end())
            throw Error(path.string() + ":" + std::to_string(line_no) + ": unknown tag \"" + tag +
                        "\"");
        current.pairs.emplace_back(std::move(token), std::move(tag));
    }
    flush();
    return docs;
}

std::vector<double> pos_frequencies(const TaggedSeq& tagged,
                                    const std::vector<std::string>& tagset) {
    if (tagged.pairs.empty()) throw Error("pos_vector: empty tagged sequence");
    std::unordered_map<std::string, std::size_t> tag_index;
    for (std::size_t i = 0; i < tagset.size(); ++i) tag_index[tagset[i]] = i;
    std::vector<double> freq(tagset.size(), 0.0);
    for (const auto& [token, tag] : tagged.pairs) {
        auto it = tag_index.find(tag);
        if (it == tag_index.end()) throw Error("pos_vector: tag outside tagset: " + tag);
        freq[it->second] += 1.0;
    }
    double total = static_cast<double>(tagged.pairs.size());
    for (double& f : freq) f /= total;
    return freq;
}

FeatureSpace build_pos_space(const std::vector<std::string>& tagset) {
    return FeatureSpace::from_names("pos", tagset);
}

SparseVector pos_vector(const TaggedSeq& tagged, const FeatureSpace& pos_space,
                        const std::vector<std::string>& tagset) {
    std::vector<double> freq = pos_frequencies(tagged, tagset);
    SparseVector v;
    v.space_hash = pos_space.hash();
    for (std::uint32_t i = 0; i < freq.size(); ++i) {
        if (freq[i] != 0.0) {
            v.idx.push_back(i);
            v.val.push_back(freq[i]);
        }
    }
    v.normalize();
    return v;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    return parse(slurp_file(path), path.string());
}

Lexicon Lexicon::parse(std::string_view text, std::string_view source_name) {
    Lexicon lex;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    int percent_seen = 0;
    std::map<long long, std::uint32_t> id_map;  // file category id -> dense id

    auto split_tabs = [](const std::string& s) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = s.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(s.substr(start));
                break;
            }
            fields.push_back(s.substr(start, tab - start));
            start = tab + 1;
        }
        return fields;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string where = std::string(source_name) + ":" + std::to_string(line_no);
        if (line == "%") {
            ++percent_seen;
            continue;
        }
        if (percent_seen == 1) {
            // header row: id<TAB>name[<TAB>punct:<chars>]
            std::vector<std::string> fields = split_tabs(line);
            if (fields.size() < 2 || fields.size() > 3)
                throw Error(where + ": malformed header row");
            long long file_id;
            try {
                file_id = std::stoll(fields[0]);
            } catch (const std::exception&) {
                throw Error(where + ": bad category id \"" + fields[0] + "\"");
            }
            if (fields[1].empty()) throw Error(where + ": empty category name");
            if (id_map.count(file_id)) throw Error(where + ": duplicate category id");
            id_map[file_id] = static_cast<std::uint32_t>(lex.categories_.size());
            lex.categories_.push_back(fields[1]);
            std::string punct;
            if (fields.size() == 3) {
                if (fields[2].rfind("punct:", 0) != 0)
                    throw Error(where + ": expected punct:<chars> in third header field");
                punct = fields[2].substr(6);
                if (punct.empty()) throw Error(where + ": empty punctuation class");
            }
            lex.punct_classes_.push_back(punct);
        } else if (percent_seen >= 2) {
            std::vector<std::string> fields = split_tabs(line);
            if (fields.size() < 2) throw Error(where + ": entry needs pattern and category id");
            if (fields[0].empty()) throw Error(where + ": empty pattern");
            Entry e;
            e.pattern = fields[0];
            if (e.pattern.back() == '*') {
                e.wildcard = true;
                e.pattern.pop_back();
                if (e.pattern.empty()) throw Error(where + ": wildcard pattern needs a prefix");
            }
            for (std::size_t i = 1; i < fields.size(); ++i) {
                long long file_id;
                try {
                    file_id = std::stoll(fields[i]);
                } catch (const std::exception&) {
                    throw Error(where + ": bad category id \"" + fields[i] + "\"");
                }
                auto it = id_map.find(file_id);
                if (it == id_map.end())
                    throw Error(where + ": entry references undeclared category " +
                                std::to_string(file_id));
                e.category_ids.push_back(it->second);
            }
            lex.entries_.push_back(std::move(e));
        } else {
            throw Error(where + ": content before the header delimiter");
        }
    }
    if (percent_seen < 2) throw Error(std::string(source_name) + ": missing % header delimiters");
    if (lex.categories_.empty()) throw Error(std::string(source_name) + ": no categories");
    lex.build_trie();
    return lex;
}

void Lexicon::build_trie() {
    trie_.clear();
    trie_.emplace_back();
    for (std::size_t ei = 0; ei < entries_.size(); ++ei) {
        const Entry& e = entries_[ei];
        std::uint32_t node = 0;
        for (char c : e.pattern) {
            auto it = trie_[node].children.find(c);
            if (it == trie_[node].children.end()) {
                trie_.emplace_back();
                it = trie_[node].children.emplace(c, static_cast<std::uint32_t>(trie_.size() - 1))
                         .first;
            }
            node = it->second;
        }
        auto& slot = e.wildcard ? trie_[node].wildcard_entry : trie_[node].literal_entry;
        if (slot != -1)
            throw Error("lexicon: duplicate pattern \"" + e.pattern +
                        (e.wildcard ? "*" : "") + "\"");
        slot = static_cast<std::int32_t>(ei);
    }
}

std::span<const std::uint32_t> Lexicon::match(std::string_view token) const {
    std::uint32_t node = 0;
    std::int32_t best_wildcard = trie_[0].wildcard_entry;  // "" prefix never exists, but harmless
    std::int32_t literal = -1;
    for (std::size_t i = 0; i < token.size(); ++i) {
        auto it = trie_[node].children.find(token[i]);
        if (it == trie_[node].children.end()) {
            literal = -1;
            break;
        }
        node = it->second;
        if (trie_[node].wildcard_entry != -1) best_wildcard = trie_[node].wildcard_entry;
        if (i + 1 == token.size()) literal = trie_[node].literal_entry;
    }
    std::int32_t chosen = literal != -1 ? literal : best_wildcard;
    if (chosen == -1) return {};
    const Entry& e = entries_[static_cast<std::size_t>(chosen)];
    return {e.category_ids.data(), e.category_ids.size()};
}

std::string Lexicon::dump() const {
    std::ostringstream os;
    os << "%\n";
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        os << (i + 1) << '\t' << categories_[i];
        if (!punct_classes_[i].empty()) os << '\t' << "punct:" << punct_classes_[i];
        os << '\n';
    }
    os << "%\n";
    for (const Entry& e : entries_) {
        os << e.pattern << (e.wildcard ? "*" : "");
        for (std::uint32_t id : e.category_ids) os << '\t' << (id + 1);
        os << '\n';
    }
    return os.str();
}

FeatureSpace build_lexicon_space(const Lexicon& lexicon) {
    return FeatureSpace::from_names("lexicon", lexicon.categories());
}

std::vector<double> lexicon_rates(const TokenSeq& seq, const Lexicon& lexicon) {
    std::vector<double> counts(lexicon.category_count(), 0.0);
    for (const std::string& token : seq.tokens) {
        for (std::uint32_t cat : lexicon.match(token)) counts[cat] += 1.0;
        for (char c : token) {
            for (std::uint32_t cat = 0; cat < lexicon.category_count(); ++cat) {
                const std::string& cls = lexicon.punct_class(cat);
                if (!cls.empty() && cls.find(c) != std::string::npos) counts[cat] += 1.0;
            }
        }
    }
    if (!seq.tokens.empty()) {
        double total = static_cast<double>(seq.tokens.size());
        for (double& c : counts) c /= total;
    }
    return counts;
}

SparseVector lexicon_vector(const TokenSeq& seq, const Lexicon& lexicon,
                            const FeatureSpace& lexicon_space, bool normalize) {
    std::vector<double> rates = lexicon_rates(seq, lexicon);
    SparseVector v;
    v.space_hash = lexicon_space.hash();
    for (std::uint32_t i = 0; i < rates.size(); ++i) {
        if (rates[i] != 0.0) {
            v.idx.push_back(i);
            v.val.push_back(rates[i]);
        }
    }
    if (normalize) v.normalize();
    return v;
}

SparseVector combine_blocks(const FeatureSpace& combined,
                            const std::vector<std::pair<std::string, SparseVector>>& blocks) {
    std::vector<bool> used(combined.blocks().size(), false);
    SparseVector out;
    out.space_hash = combined.hash();

    std::vector<std::pair<std::uint32_t, double>> entries;
    for (const auto& [block_name, vec] : blocks) {
        const FeatureSpace::Block& b = combined.block(block_name);
        std::size_t block_pos = 0;
        for (std::size_t i = 0; i < combined.blocks().size(); ++i)
            if (combined.blocks()[i].name == block_name) block_pos = i;
        if (used[block_pos])
            throw Error("combine_blocks: block \"" + block_name + "\" supplied twice");
        used[block_pos] = true;

        SparseVector norm = vec;
        norm.normalize();  // zero blocks stay zero
        for (std::size_t k = 0; k < norm.idx.size(); ++k) {
            std::uint32_t target = b.begin + norm.idx[k];
            if (target >= b.end)
                throw Error("combine_blocks: index " + std::to_string(norm.idx[k]) +
                            " outside block \"" + block_name + "\"");
            entries.emplace_back(target, norm.val[k]);
        }
    }
    std::sort(entries.begin(), entries.end());
    for (const auto& [i, v] : entries) {
        out.idx.push_back(i);
        out.val.push_back(v);
    }
    return out;
}

SparseVector slice_block(const FeatureSpace& combined, const SparseVector& v,
                         std::string_view block_name) {
    const FeatureSpace::Block& b = combined.block(block_name);
    SparseVector out;
    for (std::size_t k = 0; k < v.idx.size(); ++k) {
        if (v.idx[k] >= b.begin && v.idx[k] < b.end) {
            out.idx.push_back(v.idx[k] - b.begin);
            out.val.push_back(v.val[k]);
        }
    }
    return out;
}

}  // namespace opspam
