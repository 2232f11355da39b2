#include "yzr/fixtures.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "yzr/error.hpp"

namespace yzr {

void CorpusSpec::validate() const {
    if (n_safe < 0 || n_profane < 0) throw Error(ErrorCode::InvalidArgument, "token counts must be non-negative");
    if (n_safe + n_profane < 10) throw Error(ErrorCode::InvalidArgument, "corpus needs at least 10 tokens");
    if (min_len < 3 || max_len < min_len || max_len > 24) {
        throw Error(ErrorCode::InvalidArgument, "token length range must satisfy 3 <= min <= max <= 24");
    }
    if (min_separation < 0) throw Error(ErrorCode::InvalidArgument, "min_separation must be >= 0");
    if (variant_ops < 1) throw Error(ErrorCode::InvalidArgument, "variant_ops must be >= 1");
}

int edit_distance(std::string_view a, std::string_view b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

std::string random_token(std::mt19937_64& rng, int min_len, int max_len) {
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<int> letter(0, 25);
    std::string s(static_cast<std::size_t>(len(rng)), 'a');
    for (auto& c : s) c = static_cast<char>('a' + letter(rng));
    return s;
}

bool proper_prefix(const std::string& a, const std::string& b) {
    return a.size() < b.size() && b.compare(0, a.size(), a) == 0;
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const long budget = 2000L * (spec.n_safe + spec.n_profane) + 10000;
    long attempts = 0;
    Corpus out;
    std::unordered_set<std::string> used;

    while (static_cast<int>(out.profane.size()) < spec.n_profane) {
        if (++attempts > budget) throw Error(ErrorCode::SpecInfeasible, "cannot place the profane keys with the required separation");
        std::string t = random_token(rng, spec.min_len, spec.max_len);
        bool ok = !used.count(t);
        for (const auto& k : out.profane) {
            if (!ok) break;
            ok = edit_distance(t, k) >= spec.min_separation && !proper_prefix(t, k) && !proper_prefix(k, t);
        }
        if (!ok) continue;
        used.insert(t);
        out.profane.push_back(std::move(t));
    }
    while (static_cast<int>(out.safe.size()) < spec.n_safe) {
        if (++attempts > budget) throw Error(ErrorCode::SpecInfeasible, "cannot place the safe tokens with the required separation");
        std::string t = random_token(rng, spec.min_len, spec.max_len);
        bool ok = !used.count(t);
        for (const auto& k : out.profane) {
            if (!ok) break;
            ok = edit_distance(t, k) >= spec.min_separation && !proper_prefix(t, k);
        }
        if (!ok) continue;
        used.insert(t);
        out.safe.push_back(std::move(t));
    }
    return out;
}

namespace {

void enumerate(const std::string& key, std::size_t pos, int edits_left, bool edited, std::string& acc,
               std::set<std::string>& out) {
    if (pos + 1 == key.size()) {
        if (edited) out.insert(acc + key.back());
        return;
    }
    acc.push_back(key[pos]);
    enumerate(key, pos + 1, edits_left, edited, acc, out);
    acc.pop_back();
    if (pos == 0 || edits_left == 0) return;
    enumerate(key, pos + 1, edits_left - 1, true, acc, out);  // delete
    acc.push_back('*');
    enumerate(key, pos + 1, edits_left - 1, true, acc, out);  // star
    acc.pop_back();
}

}  // namespace

std::vector<std::string> variant_space(std::string_view key, int ops) {
    if (key.size() < 3) throw Error(ErrorCode::TokenTooShort, "variants need a key of at least 3 characters");
    if (ops < 1) throw Error(ErrorCode::InvalidArgument, "ops must be >= 1");
    std::set<std::string> out;
    std::string acc;
    enumerate(std::string(key), 0, ops, false, acc, out);
    out.erase(std::string(key));
    return {out.begin(), out.end()};
}

std::vector<std::string> generate_variants(std::string_view key, int n, int ops, std::uint64_t seed) {
    std::vector<std::string> space = variant_space(key, ops);
    if (n < 0 || static_cast<std::size_t>(n) > space.size()) {
        throw Error(ErrorCode::NotEnoughVariants, "'" + std::string(key) + "' has only " + std::to_string(space.size()) +
                                                       " variants within " + std::to_string(ops) + " edits");
    }
    std::mt19937_64 rng(seed);
    std::shuffle(space.begin(), space.end(), rng);
    space.resize(static_cast<std::size_t>(n));
    return space;
}

namespace {

std::string render(const std::string& key, ProfaneStyle style, int ops, std::mt19937_64& rng) {
    switch (style) {
        case ProfaneStyle::Exact:
            return key;
        case ProfaneStyle::Censored: {
            std::vector<std::string> starred;
            for (auto& v : variant_space(key, ops)) {
                if (v.size() == key.size()) starred.push_back(std::move(v));
            }
            return starred[std::uniform_int_distribution<std::size_t>(0, starred.size() - 1)(rng)];
        }
        case ProfaneStyle::Variant: {
            const auto space = variant_space(key, ops);
            return space[std::uniform_int_distribution<std::size_t>(0, space.size() - 1)(rng)];
        }
        case ProfaneStyle::Spaced: {
            std::string s;
            for (char c : key) {
                if (!s.empty()) s += ' ';
                s += c;
            }
            return s;
        }
        case ProfaneStyle::Mixed:
            break;
    }
    const auto pick = static_cast<ProfaneStyle>(std::uniform_int_distribution<int>(0, 3)(rng));
    return render(key, pick, ops, rng);
}

}  // namespace

std::vector<LabeledChat> generate_chats(const Corpus& corpus, const ChatSpec& spec) {
    if (spec.n_chats < 0 || spec.min_words < 1 || spec.max_words < spec.min_words) {
        throw Error(ErrorCode::InvalidArgument, "invalid chat spec");
    }
    if (corpus.safe.empty()) throw Error(ErrorCode::InvalidArgument, "chat generation needs safe tokens");
    const bool can_profane = !corpus.profane.empty();
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> words(spec.min_words, spec.max_words);
    std::uniform_int_distribution<std::size_t> safe_pick(0, corpus.safe.size() - 1);
    std::bernoulli_distribution profane(can_profane ? spec.profane_fraction : 0.0);
    std::vector<LabeledChat> out;
    out.reserve(static_cast<std::size_t>(spec.n_chats));
    for (int i = 0; i < spec.n_chats; ++i) {
        const int n = words(rng);
        std::vector<std::string> w;
        for (int k = 0; k < n; ++k) w.push_back(corpus.safe[safe_pick(rng)]);
        LabeledChat chat;
        if (profane(rng)) {
            const auto& key = corpus.profane[std::uniform_int_distribution<std::size_t>(0, corpus.profane.size() - 1)(rng)];
            const auto at = std::uniform_int_distribution<std::size_t>(0, w.size())(rng);
            w.insert(w.begin() + static_cast<std::ptrdiff_t>(at), render(key, spec.style, spec.variant_ops, rng));
            chat.gold = Gold::Profane;
        }
        for (const auto& x : w) {
            if (!chat.text.empty()) chat.text += ' ';
            chat.text += x;
        }
        out.push_back(std::move(chat));
    }
    return out;
}

void write_fixture_files(const std::filesystem::path& dir, const Corpus& corpus, const CorpusSpec& spec,
                         const ChatSpec& chats) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    write_lines(dir / "safe.txt", corpus.safe);
    write_lines(dir / "profane.txt", corpus.profane);
    std::vector<std::string> variants;
    for (const auto& k : corpus.profane) {
        for (const auto& v : variant_space(k, spec.variant_ops)) variants.push_back(k + '\t' + v);
    }
    write_lines(dir / "variants.txt", variants);
    write_labeled_csv(dir / "chats.csv", generate_chats(corpus, chats));
}

}  // namespace yzr
