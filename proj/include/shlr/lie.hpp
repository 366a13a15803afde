#pragma once

#include "shlr/errors.hpp"
#include "shlr/perm.hpp"
#include "shlr/rational.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace shlr {

/// Word in the tensor algebra: sequence of letter indices.
using Word = std::vector<int>;

/// Element of the tensor algebra over Q on graded letters.
struct TensorPoly {
    std::map<Word, Rat> terms;

    bool is_zero() const { return terms.empty(); }
    void add(const Word& w, const Rat& c) {
        if (c == 0) return;
        auto it = terms.find(w);
        if (it == terms.end()) {
            terms[w] = c;
        } else {
            it->second += c;
            if (it->second == 0) terms.erase(it);
        }
    }
    TensorPoly& operator+=(const TensorPoly& o) {
        for (auto& [w, c] : o.terms) add(w, c);
        return *this;
    }
    friend TensorPoly operator*(const Rat& q, TensorPoly p) {
        for (auto& [w, c] : p.terms) c *= q;
        return p;
    }
};

/// Free graded Lie algebra on ordered letters; basis by Lyndon words plus
/// squares [l,l] of odd-degree Lyndon elements, normal forms through the
/// tensor-algebra embedding with triangular elimination on the smallest word.
class FreeLie {
  public:
    std::vector<Deg> letter_deg;

    explicit FreeLie(std::vector<Deg> degs) : letter_deg(std::move(degs)) {}

    struct BasisElem {
        Word word;    // the Lyndon word l (for squares, the tree is [l,l])
        bool square;  // true: [l,l] with l odd Lyndon
    };

    Deg word_degree(const Word& w) const {
        Deg d = 0;
        for (int a : w) d += letter_deg[a];
        return d;
    }

    static bool is_lyndon(const Word& w) {
        // strictly smallest among its proper rotations
        int n = (int)w.size();
        if (n == 0) return false;
        for (int r = 1; r < n; ++r) {
            for (int i = 0; i < n; ++i) {
                int a = w[i], b = w[(i + r) % n];
                if (a != b) {
                    if (b < a) return false;
                    break;
                }
                if (i == n - 1) return false;  // equal rotation: periodic word
            }
        }
        return true;
    }

    const std::vector<BasisElem>& basis(int weight) const {
        auto it = basis_cache_.find(weight);
        if (it != basis_cache_.end()) return it->second;
        std::vector<BasisElem> out;
        Word w(weight, 0);
        int n = (int)letter_deg.size();
        // enumerate all words, keep Lyndon ones (lexicographic order)
        std::function<void(int)> rec = [&](int pos) {
            if (pos == weight) {
                if (is_lyndon(w)) out.push_back({w, false});
                return;
            }
            for (int a = 0; a < n; ++a) {
                w[pos] = a;
                rec(pos + 1);
            }
        };
        if (n > 0 && weight >= 1) rec(0);
        // odd squares at even weight
        if (weight % 2 == 0 && weight >= 2) {
            for (auto& b : basis(weight / 2))
                if (!b.square && is_odd(word_degree(b.word))) out.push_back({b.word, true});
        }
        // deterministic order: non-squares by word, then squares by word
        std::sort(out.begin(), out.end(), [](const BasisElem& a, const BasisElem& b) {
            if (a.square != b.square) return !a.square;
            return a.word < b.word;
        });
        return basis_cache_.emplace(weight, std::move(out)).first->second;
    }

    /// Standard factorization of a Lyndon word: w = u v with v the longest
    /// proper Lyndon suffix; bracketing is [b(u), b(v)].
    static std::pair<Word, Word> standard_factorization(const Word& w) {
        if (w.size() < 2) throw argument_error("standard factorization of a letter");
        for (size_t i = 1; i < w.size(); ++i) {
            Word v(w.begin() + i, w.end());
            if (is_lyndon(v)) return {Word(w.begin(), w.begin() + i), v};
        }
        throw argument_error("not a Lyndon word");
    }

    TensorPoly letter(int a) const {
        TensorPoly p;
        p.add({a}, 1);
        return p;
    }

    TensorPoly concat(const TensorPoly& p, const TensorPoly& q) const {
        TensorPoly out;
        for (auto& [u, c] : p.terms)
            for (auto& [v, d] : q.terms) {
                Word w = u;
                w.insert(w.end(), v.begin(), v.end());
                out.add(w, c * d);
            }
        return out;
    }

    /// [p,q] = p q - (-1)^{|p||q|} q p for homogeneous p, q.
    TensorPoly bracket(const TensorPoly& p, const TensorPoly& q) const {
        if (p.is_zero() || q.is_zero()) return {};
        Deg dp = word_degree(p.terms.begin()->first);
        Deg dq = word_degree(q.terms.begin()->first);
        int s = (is_odd(dp) && is_odd(dq)) ? -1 : 1;
        TensorPoly out = concat(p, q);
        out += Rat(-s) * concat(q, p);
        return out;
    }

    TensorPoly expand_lyndon(const Word& w) const {
        auto it = expand_cache_.find(w);
        if (it != expand_cache_.end()) return it->second;
        TensorPoly out;
        if (w.size() == 1) {
            out = letter(w[0]);
        } else {
            auto [u, v] = standard_factorization(w);
            out = bracket(expand_lyndon(u), expand_lyndon(v));
        }
        expand_cache_[w] = out;
        return out;
    }

    TensorPoly expand(const BasisElem& b) const {
        TensorPoly l = expand_lyndon(b.word);
        return b.square ? Rat(1, 1) * bracket(l, l) : l;
    }

    /// Express a Lie element (given in the tensor algebra, homogeneous of the
    /// stated weight) in the basis. Triangular on the smallest word.
    std::map<int, Rat> to_basis(TensorPoly p, int weight) const {
        std::map<int, Rat> out;
        const auto& bs = basis(weight);
        std::map<Word, int> leading;
        for (int i = 0; i < (int)bs.size(); ++i) {
            Word lead = bs[i].word;
            if (bs[i].square) {
                lead.insert(lead.end(), bs[i].word.begin(), bs[i].word.end());
            }
            leading[lead] = i;
        }
        while (!p.is_zero()) {
            auto& [w, c] = *p.terms.begin();
            auto it = leading.find(w);
            if (it == leading.end())
                throw argument_error("to_basis: element is not in the free Lie algebra");
            int idx = it->second;
            Rat lead_coeff = bs[idx].square ? Rat(2) : Rat(1);
            Rat q = c / lead_coeff;
            out[idx] += q;
            p += (-q) * expand(bs[idx]);
        }
        for (auto it = out.begin(); it != out.end();)
            it = (it->second == 0) ? out.erase(it) : std::next(it);
        return out;
    }

    std::string tree_str(const BasisElem& b, const std::vector<std::string>& names) const {
        std::function<std::string(const Word&)> rec = [&](const Word& w) -> std::string {
            if (w.size() == 1) return names[w[0]];
            auto [u, v] = standard_factorization(w);
            return "[" + rec(u) + "," + rec(v) + "]";
        };
        std::string s = rec(b.word);
        return b.square ? "[" + s + "," + s + "]" : s;
    }

  private:
    mutable std::map<int, std::vector<BasisElem>> basis_cache_;
    mutable std::map<Word, TensorPoly> expand_cache_;
};

/// Witt-style dimension oracle for the free Lie algebra on g even generators:
/// dim_k = (1/k) sum_{d | k} mu(d) g^{k/d}.
inline long witt_dimension(int g, int k) {
    auto mobius = [](int n) {
        int m = 1;
        for (int p = 2; p * p <= n; ++p)
            if (n % p == 0) {
                n /= p;
                if (n % p == 0) return 0;
                m = -m;
            }
        if (n > 1) m = -m;
        return m;
    };
    long sum = 0;
    for (int d = 1; d <= k; ++d)
        if (k % d == 0) {
            long pw = 1;
            for (int i = 0; i < k / d; ++i) pw *= g;
            sum += mobius(d) * pw;
        }
    return sum / k;
}

}  // namespace shlr
