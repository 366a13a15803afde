#pragma once

#include "shlr/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace shlr {

/// Cohomological degree. Differentials raise it by 1.
using Deg = int;

inline bool is_odd(Deg d) { return (d % 2) != 0; }

/// Permutation of {1..n}, stored as 1-based images: sigma[i-1] = sigma(i).
struct Perm {
    std::vector<int> images;

    explicit Perm(std::vector<int> im) : images(std::move(im)) {
        std::vector<char> seen(images.size(), 0);
        for (int v : images) {
            if (v < 1 || v > (int)images.size() || seen[v - 1])
                throw argument_error("not a bijection on {1..n}");
            seen[v - 1] = 1;
        }
    }

    static Perm identity(int n) {
        std::vector<int> im(n);
        std::iota(im.begin(), im.end(), 1);
        return Perm(std::move(im));
    }

    int size() const { return (int)images.size(); }
    int operator()(int i) const { return images[i - 1]; }

    bool operator==(const Perm& o) const { return images == o.images; }
};

/// Koszul sign of sigma on graded symmetric factors:
/// m_{sigma(1)} (.) ... (.) m_{sigma(n)} = sign * m_1 (.) ... (.) m_n.
/// Bubble-sorts the reordered sequence back; each adjacent swap of factors
/// of degrees p, q contributes (-1)^{p q}.
inline int koszul_sign(const std::vector<Deg>& degrees, const Perm& sigma) {
    if ((int)degrees.size() != sigma.size())
        throw argument_error("koszul_sign: degree vector and permutation size differ");
    std::vector<int> idx = sigma.images;
    std::vector<Deg> deg(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) deg[i] = degrees[idx[i] - 1];
    int sign = 1;
    for (size_t i = 0; i + 1 < idx.size(); ++i)
        for (size_t j = 0; j + 1 < idx.size() - i; ++j)
            if (idx[j] > idx[j + 1]) {
                if (is_odd(deg[j]) && is_odd(deg[j + 1])) sign = -sign;
                std::swap(idx[j], idx[j + 1]);
                std::swap(deg[j], deg[j + 1]);
            }
    return sign;
}

/// Koszul sign that sorts `keys` ascending (stable), for degree vector `degrees`
/// given in the same order as keys. Used to normalize symmetric tuples.
inline int koszul_sort_sign(std::vector<int>& keys, std::vector<Deg>& degrees) {
    int sign = 1;
    for (size_t i = 0; i + 1 < keys.size(); ++i)
        for (size_t j = 0; j + 1 < keys.size() - i; ++j)
            if (keys[j] > keys[j + 1]) {
                if (is_odd(degrees[j]) && is_odd(degrees[j + 1])) sign = -sign;
                std::swap(keys[j], keys[j + 1]);
                std::swap(degrees[j], degrees[j + 1]);
            }
    return sign;
}

/// All (l,m)-unshuffles: sigma with sigma(1)<...<sigma(l), sigma(l+1)<...<sigma(l+m).
inline std::vector<Perm> unshuffles(int l, int m) {
    if (l < 0 || m < 0) throw argument_error("unshuffles: negative part");
    int n = l + m;
    std::vector<Perm> out;
    std::vector<int> comb(l);
    std::iota(comb.begin(), comb.end(), 1);
    auto emit = [&](const std::vector<int>& first) {
        std::vector<int> im;
        im.reserve(n);
        std::vector<char> used(n + 1, 0);
        for (int v : first) {
            im.push_back(v);
            used[v] = 1;
        }
        for (int v = 1; v <= n; ++v)
            if (!used[v]) im.push_back(v);
        out.push_back(Perm(std::move(im)));
    };
    if (l == 0 || m == 0) {
        emit(comb);
        return out;
    }
    while (true) {
        emit(comb);
        int i = l - 1;
        while (i >= 0 && comb[i] == n - l + i + 1) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < l; ++j) comb[j] = comb[j - 1] + 1;
    }
    return out;
}

/// Multi-unshuffles Sh(n_1,...,n_r): increasing within each consecutive block.
inline std::vector<Perm> multi_unshuffles(const std::vector<int>& parts) {
    if (parts.empty()) throw argument_error("multi_unshuffles: empty part list");
    for (int p : parts)
        if (p < 1) throw argument_error("multi_unshuffles: zero-size part");
    int n = std::accumulate(parts.begin(), parts.end(), 0);
    std::vector<Perm> out;
    std::vector<int> im;
    std::vector<char> used(n + 1, 0);
    // Choose each block as an increasing sequence from the unused letters.
    std::function<void(size_t)> rec = [&](size_t b) {
        if (b == parts.size()) {
            out.push_back(Perm(im));
            return;
        }
        std::vector<int> avail;
        for (int v = 1; v <= n; ++v)
            if (!used[v]) avail.push_back(v);
        std::vector<int> comb(parts[b]);
        std::iota(comb.begin(), comb.end(), 0);
        while (true) {
            for (int c : comb) {
                im.push_back(avail[c]);
                used[avail[c]] = 1;
            }
            rec(b + 1);
            for (int c : comb) {
                used[avail[c]] = 0;
            }
            im.resize(im.size() - parts[b]);
            int k = parts[b], m = (int)avail.size();
            int i = k - 1;
            while (i >= 0 && comb[i] == m - k + i) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
        }
    };
    rec(0);
    return out;
}

/// All set partitions of {0,..,n-1}. Blocks sorted internally and by first element.
inline std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<std::vector<int>> cur;
    std::function<void(int)> rec = [&](int i) {
        if (i == n) {
            out.push_back(cur);
            return;
        }
        size_t existing = cur.size();
        for (size_t b = 0; b < existing; ++b) {
            cur[b].push_back(i);
            rec(i + 1);
            cur[b].pop_back();
        }
        cur.push_back({i});
        rec(i + 1);
        cur.pop_back();
    };
    rec(0);
    return out;
}

inline long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace shlr
