#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "hgm/error.hpp"

namespace hgm {

// Letter code: 2k for gamma_k, 2k+1 for its inverse (k = 0..3).
using Letter = int;

constexpr int kNumGens = 4;
constexpr int kNumLetters = 8;

constexpr Letter letter(int gen, bool inv) { return 2 * gen + (inv ? 1 : 0); }
constexpr int gen_of(Letter l) { return l >> 1; }
constexpr bool is_inv(Letter l) { return (l & 1) != 0; }
constexpr Letter inv_letter(Letter l) { return l ^ 1; }
// 1-based signed index: gamma_k -> k+1, gamma_k^{-1} -> -(k+1)
constexpr int signed_index(Letter l) { return is_inv(l) ? -(gen_of(l) + 1) : gen_of(l) + 1; }
inline Letter from_signed_index(int i) {
    if (i == 0 || i > kNumGens || i < -kNumGens) fail(ErrorKind::Config, "letter index out of range: " + std::to_string(i));
    return i > 0 ? letter(i - 1, false) : letter(-i - 1, true);
}

struct GroupWord {
    std::vector<Letter> letters;

    GroupWord() = default;
    explicit GroupWord(std::vector<Letter> l) : letters(std::move(l)) {}

    std::size_t size() const { return letters.size(); }
    bool empty() const { return letters.empty(); }
    Letter operator[](std::size_t i) const { return letters[i]; }

    friend bool operator==(const GroupWord&, const GroupWord&) = default;
    friend auto operator<=>(const GroupWord& x, const GroupWord& y) { return x.letters <=> y.letters; }
};

inline GroupWord concat(const GroupWord& x, const GroupWord& y) {
    GroupWord r = x;
    r.letters.insert(r.letters.end(), y.letters.begin(), y.letters.end());
    return r;
}
inline GroupWord operator*(const GroupWord& x, const GroupWord& y) { return concat(x, y); }

inline GroupWord inverse(const GroupWord& w) {
    GroupWord r;
    r.letters.reserve(w.size());
    for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) r.letters.push_back(inv_letter(*it));
    return r;
}

inline GroupWord free_reduce(const GroupWord& w) {
    GroupWord r;
    for (Letter l : w.letters) {
        if (!r.letters.empty() && r.letters.back() == inv_letter(l)) r.letters.pop_back();
        else r.letters.push_back(l);
    }
    return r;
}

// Free reduction followed by cancellation across the cyclic seam.
inline GroupWord cyclic_reduce(const GroupWord& w) {
    GroupWord r = free_reduce(w);
    std::size_t i = 0, j = r.size();
    while (j - i >= 2 && r.letters[i] == inv_letter(r.letters[j - 1])) { ++i; --j; }
    return GroupWord(std::vector<Letter>(r.letters.begin() + i, r.letters.begin() + j));
}

inline GroupWord rotate(const GroupWord& w, std::size_t k) {
    GroupWord r = w;
    if (!r.empty()) std::rotate(r.letters.begin(), r.letters.begin() + (k % r.size()), r.letters.end());
    return r;
}

inline GroupWord least_rotation(const GroupWord& w) {
    GroupWord best = w;
    for (std::size_t k = 1; k < w.size(); ++k) {
        GroupWord r = rotate(w, k);
        if (r < best) best = std::move(r);
    }
    return best;
}

// Smallest period d | n with w = (prefix of length d)^(n/d).
inline std::size_t cyclic_period(const GroupWord& w) {
    const std::size_t n = w.size();
    for (std::size_t d = 1; d < n; ++d) {
        if (n % d) continue;
        bool ok = true;
        for (std::size_t i = d; i < n && ok; ++i) ok = w.letters[i] == w.letters[i - d];
        if (ok) return d;
    }
    return n;
}

// Compact text form: a..d for gamma_0..gamma_3, A..D for inverses.
inline std::string to_string(const GroupWord& w) {
    std::string s;
    for (Letter l : w.letters) s.push_back(static_cast<char>((is_inv(l) ? 'A' : 'a') + gen_of(l)));
    return s;
}

inline std::vector<int> to_signed(const GroupWord& w) {
    std::vector<int> v;
    v.reserve(w.size());
    for (Letter l : w.letters) v.push_back(signed_index(l));
    return v;
}

inline GroupWord from_signed(const std::vector<int>& v) {
    GroupWord w;
    for (int i : v) w.letters.push_back(from_signed_index(i));
    return w;
}

// Accepts the compact letter form ("aBcD") or signed indices ("1,-2,3,-4").
inline GroupWord parse_word(const std::string& text) {
    GroupWord w;
    bool numeric = std::any_of(text.begin(), text.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
    if (!numeric) {
        for (char ch : text) {
            if (ch >= 'a' && ch <= 'd') w.letters.push_back(letter(ch - 'a', false));
            else if (ch >= 'A' && ch <= 'D') w.letters.push_back(letter(ch - 'A', true));
            else if (!std::isspace(static_cast<unsigned char>(ch)) && ch != ',')
                fail(ErrorKind::Config, std::string("bad letter in word: ") + ch);
        }
        return w;
    }
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        w.letters.push_back(from_signed_index(std::stoi(cur)));
        cur.clear();
    };
    for (char ch : text) {
        if (ch == '-' || ch == '+' || std::isdigit(static_cast<unsigned char>(ch))) cur.push_back(ch);
        else if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) flush();
        else fail(ErrorKind::Config, std::string("bad character in word: ") + ch);
    }
    flush();
    return w;
}

} // namespace hgm
