// Copyright 2026 The diqkd-ps Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Operator words over the five outcome-0 projectors {A1, A2, B1, B2, B3} and
// the moment-matrix index structure built from them.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diqkd/errors.hpp"

namespace diqkd::npa {

enum class Symbol : std::uint8_t { A1 = 0, A2 = 1, B1 = 2, B2 = 3, B3 = 4 };

inline constexpr int kAlphabetSize = 5;

constexpr bool is_alice(Symbol s) { return s == Symbol::A1 || s == Symbol::A2; }
constexpr Symbol alice_symbol(int x) { return static_cast<Symbol>(x); }
constexpr Symbol bob_symbol(int y) { return static_cast<Symbol>(2 + y); }

class OperatorWord;
inline OperatorWord canonicalize(std::span<const Symbol> raw);

/// A product of projectors in canonical form: Alice's factors first, no two
/// equal neighbours. The empty word is the identity.
class OperatorWord {
   public:
    OperatorWord() = default;

    std::span<const Symbol> symbols() const { return symbols_; }
    std::size_t size() const { return symbols_.size(); }
    bool is_identity() const { return symbols_.empty(); }

    friend bool operator==(const OperatorWord &, const OperatorWord &) = default;

    /// Graded lexicographic: shorter words first, then symbol by symbol.
    friend bool operator<(const OperatorWord &l, const OperatorWord &r) {
        if (l.size() != r.size()) return l.size() < r.size();
        return l.symbols_ < r.symbols_;
    }

    std::string to_string() const {
        if (symbols_.empty()) return "1";
        static constexpr const char *names[] = {"A1", "A2", "B1", "B2", "B3"};
        std::string s;
        for (Symbol sym : symbols_) s += names[static_cast<int>(sym)];
        return s;
    }

   private:
    friend OperatorWord canonicalize(std::span<const Symbol>);
    std::vector<Symbol> symbols_;
};

inline std::ostream &operator<<(std::ostream &os, const OperatorWord &w) { return os << w.to_string(); }

/// Commute Alice's projectors to the front (keeping each party's order), then
/// collapse repeated neighbours P P = P.
inline OperatorWord canonicalize(std::span<const Symbol> raw) {
    OperatorWord w;
    auto push = [&](Symbol s) {
        if (w.symbols_.empty() || w.symbols_.back() != s) w.symbols_.push_back(s);
    };
    for (Symbol s : raw)
        if (is_alice(s)) push(s);
    const std::size_t alice_len = w.symbols_.size();
    for (Symbol s : raw) {
        if (is_alice(s)) continue;
        if (w.symbols_.size() == alice_len || w.symbols_.back() != s) w.symbols_.push_back(s);
    }
    return w;
}

inline OperatorWord canonicalize(std::initializer_list<Symbol> raw) {
    return canonicalize(std::span<const Symbol>(raw.begin(), raw.size()));
}

/// Canonical form of the adjoint (reversed product).
inline OperatorWord adjoint(const OperatorWord &w) {
    std::vector<Symbol> rev(w.symbols().rbegin(), w.symbols().rend());
    return canonicalize(rev);
}

/// Canonical form of u^dagger v.
inline OperatorWord moment_word(const OperatorWord &u, const OperatorWord &v) {
    std::vector<Symbol> raw(u.symbols().rbegin(), u.symbols().rend());
    raw.insert(raw.end(), v.symbols().begin(), v.symbols().end());
    return canonicalize(raw);
}

/// Hierarchy level. `extra_abb` adds every word A_x B_y B_y' to level 2.
struct RelaxationLevel {
    int depth = 2;
    bool extra_abb = false;

    friend bool operator==(const RelaxationLevel &, const RelaxationLevel &) = default;

    std::string to_string() const { return extra_abb ? std::to_string(depth) + "ab" : std::to_string(depth); }

    static RelaxationLevel parse(const std::string &text) {
        if (text == "2ab" || text == "2+ab" || text == "2+AB") return {2, true};
        if (text.size() == 1 && text[0] >= '1' && text[0] <= '9') return {text[0] - '0', false};
        throw ParameterError("level", "expected 1..4 or 2ab, got '" + text + "'");
    }
};

inline constexpr int kMaxTractableDepth = 4;

namespace detail {

// All alternating sequences of length n over `letters` with no equal neighbours.
inline void alternating(std::span<const Symbol> letters, int n, std::vector<std::vector<Symbol>> &out) {
    if (n == 0) {
        out.push_back({});
        return;
    }
    std::vector<std::vector<Symbol>> shorter;
    alternating(letters, n - 1, shorter);
    for (const auto &s : shorter)
        for (Symbol l : letters)
            if (s.empty() || s.back() != l) {
                auto t = s;
                t.push_back(l);
                out.push_back(std::move(t));
            }
}

}  // namespace detail

/// All distinct canonical words of length <= depth (plus the A.B.B words for
/// the extended level), in graded lexicographic order.
inline std::vector<OperatorWord> generate_words(RelaxationLevel level, bool allow_large = false) {
    if (level.depth < 1) throw ParameterError("level", "must be >= 1");
    if (level.depth > kMaxTractableDepth && !allow_large)
        throw ParameterError("level", "depth above 4 is rejected unless explicitly allowed");
    if (level.extra_abb && level.depth != 2) throw ParameterError("level", "the A.B.B extension applies to level 2 only");

    static constexpr Symbol alice[] = {Symbol::A1, Symbol::A2};
    static constexpr Symbol bob[] = {Symbol::B1, Symbol::B2, Symbol::B3};

    std::vector<OperatorWord> words;
    for (int len = 0; len <= level.depth; ++len)
        for (int na = 0; na <= len; ++na) {
            std::vector<std::vector<Symbol>> as, bs;
            detail::alternating(alice, na, as);
            detail::alternating(bob, len - na, bs);
            for (const auto &a : as)
                for (const auto &b : bs) {
                    auto raw = a;
                    raw.insert(raw.end(), b.begin(), b.end());
                    words.push_back(canonicalize(raw));
                }
        }
    if (level.extra_abb) {
        std::vector<std::vector<Symbol>> bs;
        detail::alternating(bob, 2, bs);
        for (Symbol a : alice)
            for (const auto &b : bs) {
                std::vector<Symbol> raw{a};
                raw.insert(raw.end(), b.begin(), b.end());
                words.push_back(canonicalize(raw));
            }
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
}

/// Index structure of one real symmetric moment matrix Gamma[u,v] = <u^dagger v>.
/// A word and its adjoint share one scalar variable.
struct MomentRelaxation {
    RelaxationLevel level;
    std::vector<OperatorWord> words;
    /// Representative word of each scalar variable.
    std::vector<OperatorWord> moments;
    Eigen::MatrixXi entry_index;
    std::map<OperatorWord, int> variable_of;

    int dim() const { return static_cast<int>(words.size()); }
    int num_variables() const { return static_cast<int>(moments.size()); }

    /// Variable holding <w>; throws if the word does not occur in the matrix.
    int variable(const OperatorWord &w) const {
        auto it = variable_of.find(representative(w));
        if (it == variable_of.end())
            throw ParameterError("word", "moment " + w.to_string() + " is not part of this relaxation");
        return it->second;
    }

    static OperatorWord representative(const OperatorWord &w) {
        OperatorWord adj = adjoint(w);
        return adj < w ? adj : w;
    }

    /// One canonical word per line.
    std::string dump() const {
        std::ostringstream os;
        for (const auto &w : words) os << w << '\n';
        return os.str();
    }
};

inline MomentRelaxation build_relaxation(RelaxationLevel level, bool allow_large = false) {
    MomentRelaxation rel;
    rel.level = level;
    rel.words = generate_words(level, allow_large);
    const int n = rel.dim();
    rel.entry_index.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const OperatorWord w = MomentRelaxation::representative(moment_word(rel.words[i], rel.words[j]));
            auto [it, inserted] = rel.variable_of.try_emplace(w, rel.num_variables());
            if (inserted) rel.moments.push_back(w);
            rel.entry_index(i, j) = it->second;
            rel.entry_index(j, i) = it->second;
        }
    return rel;
}

/// Process-wide cache of immutable relaxations, safe to call from any thread.
inline std::shared_ptr<const MomentRelaxation> shared_relaxation(RelaxationLevel level, bool allow_large = false) {
    static std::mutex mutex;
    static std::map<std::pair<int, bool>, std::shared_ptr<const MomentRelaxation>> cache;
    const std::lock_guard<std::mutex> lock(mutex);
    auto &slot = cache[{level.depth, level.extra_abb}];
    if (!slot) slot = std::make_shared<const MomentRelaxation>(build_relaxation(level, allow_large));
    return slot;
}

}  // namespace diqkd::npa
