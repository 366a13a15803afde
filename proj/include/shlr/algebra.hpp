#pragma once

#include "shlr/errors.hpp"
#include "shlr/linalg.hpp"
#include "shlr/perm.hpp"
#include "shlr/rational.hpp"
#include "shlr/report.hpp"

#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace shlr {

struct Gen {
    std::string name;
    Deg degree = 0;
};

/// Normalized graded-commutative monomial: factors sorted by generator index,
/// exponents >= 1, odd generators never repeated.
struct Monomial {
    std::vector<std::pair<int, int>> factors;  // (generator index, exponent)

    bool is_one() const { return factors.empty(); }
    int poly_degree() const {
        int d = 0;
        for (auto& [g, e] : factors) d += e;
        return d;
    }
    bool operator<(const Monomial& o) const { return factors < o.factors; }
    bool operator==(const Monomial& o) const { return factors == o.factors; }
};

/// Sparse Q-linear combination of monomials. Zero = empty map.
struct Elem {
    std::map<Monomial, Rat> terms;

    static Elem zero() { return {}; }
    static Elem one() {
        Elem e;
        e.terms[Monomial{}] = 1;
        return e;
    }
    bool is_zero() const { return terms.empty(); }

    Elem& operator+=(const Elem& o) {
        for (auto& [m, c] : o.terms) {
            auto it = terms.find(m);
            if (it == terms.end()) {
                terms[m] = c;
            } else {
                it->second += c;
                if (it->second == 0) terms.erase(it);
            }
        }
        return *this;
    }
    Elem& operator-=(const Elem& o) {
        for (auto& [m, c] : o.terms) {
            auto it = terms.find(m);
            if (it == terms.end()) {
                terms[m] = -c;
            } else {
                it->second -= c;
                if (it->second == 0) terms.erase(it);
            }
        }
        return *this;
    }
    friend Elem operator+(Elem a, const Elem& b) { return a += b; }
    friend Elem operator-(Elem a, const Elem& b) { return a -= b; }
    friend Elem operator*(const Rat& c, Elem a) {
        if (c == 0) return Elem();
        for (auto& [m, v] : a.terms) v *= c;
        return a;
    }
    friend Elem operator-(Elem a) { return Rat(-1) * std::move(a); }
    bool operator==(const Elem& o) const { return terms == o.terms; }
};

class Algebra;
using AlgPtr = std::shared_ptr<const Algebra>;

/// Normal-form oracle for A/I on the polynomial-degree window; only for
/// algebras whose generators all sit in degree 0 with zero differential.
struct NormalFormTable {
    int window = 0;
    // Echelonized reducers: pivot monomial -> (tail of the relation, as Elem).
    std::map<Monomial, Elem> reducers;
};

/// Free graded-commutative algebra on named generators with a degree-1
/// differential given on generators. Generators of a cdga have degree <= 0;
/// the ambient representation allows arbitrary integer degrees (the CE side
/// needs positive ones).
class Algebra : public std::enable_shared_from_this<Algebra> {
  public:
    std::vector<Gen> gens;
    std::vector<Elem> diff;  // differential images, one per generator
    std::optional<NormalFormTable> oracle;

    static AlgPtr make(std::vector<Gen> gs, std::map<std::string, Elem> d = {});
    static AlgPtr rationals() { return make({}); }

    int n_gens() const { return (int)gens.size(); }
    int gen_index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw argument_error("unknown generator: " + name);
        return it->second;
    }
    bool has_gen(const std::string& name) const { return index_.count(name) != 0; }
    const std::string& gen_name(int i) const { return gens[i].name; }
    Deg gen_degree(int i) const { return gens[i].degree; }

    Elem gen_elem(int i) const {
        Elem e;
        e.terms[Monomial{{{i, 1}}}] = 1;
        return e;
    }
    Elem gen_elem(const std::string& name) const { return gen_elem(gen_index(name)); }

    Deg mono_degree(const Monomial& m) const {
        Deg d = 0;
        for (auto& [g, e] : m.factors) d += e * gens[g].degree;
        return d;
    }

    /// Degree of a homogeneous element; throws on mixed degrees.
    Deg degree_of(const Elem& e) const {
        if (e.is_zero()) throw argument_error("degree of zero element");
        Deg d = mono_degree(e.terms.begin()->first);
        for (auto& [m, c] : e.terms)
            if (mono_degree(m) != d) throw argument_error("element not homogeneous");
        return d;
    }
    bool homogeneous_of_degree(const Elem& e, Deg d) const {
        for (auto& [m, c] : e.terms)
            if (mono_degree(m) != d) return false;
        return true;
    }
    int poly_degree_of(const Elem& e) const {
        int d = 0;
        for (auto& [m, c] : e.terms) d = std::max(d, m.poly_degree());
        return d;
    }

    /// Graded-commutative product of monomials; nullopt when an odd generator
    /// repeats. Sign accumulates odd-odd crossings of the merge.
    std::optional<std::pair<Monomial, int>> mono_mul(const Monomial& a, const Monomial& b) const {
        Monomial out;
        int sign = 1;
        size_t i = 0, j = 0;
        int odd_tail = 0;  // number of odd letters of `a` not yet consumed
        std::vector<int> odd_suffix(a.factors.size() + 1, 0);
        for (int k = (int)a.factors.size() - 1; k >= 0; --k)
            odd_suffix[k] = odd_suffix[k + 1] +
                            (is_odd(gens[a.factors[k].first].degree) ? a.factors[k].second : 0);
        (void)odd_tail;
        while (i < a.factors.size() || j < b.factors.size()) {
            if (j == b.factors.size() ||
                (i < a.factors.size() && a.factors[i].first <= b.factors[j].first)) {
                if (i < a.factors.size() && j < b.factors.size() &&
                    a.factors[i].first == b.factors[j].first) {
                    int g = a.factors[i].first;
                    if (is_odd(gens[g].degree)) return std::nullopt;  // odd square
                    out.factors.push_back({g, a.factors[i].second + b.factors[j].second});
                    ++i;
                    ++j;
                } else {
                    out.factors.push_back(a.factors[i]);
                    ++i;
                }
            } else {
                // letter from b moves left across the remaining letters of a
                int g = b.factors[j].first;
                if (is_odd(gens[g].degree) && (odd_suffix[i] % 2) != 0) sign = -sign;
                out.factors.push_back(b.factors[j]);
                ++j;
            }
        }
        return std::make_pair(out, sign);
    }

    Elem mul(const Elem& a, const Elem& b) const {
        Elem out;
        for (auto& [ma, ca] : a.terms)
            for (auto& [mb, cb] : b.terms) {
                auto r = mono_mul(ma, mb);
                if (!r) continue;
                Elem t;
                t.terms[r->first] = ca * cb * r->second;
                out += t;
            }
        return reduce(out);
    }

    Elem pow(const Elem& a, int n) const {
        Elem r = Elem::one();
        for (int i = 0; i < n; ++i) r = mul(r, a);
        return r;
    }

    /// Apply a degree-`udeg` derivation with generator images `im` to `e`.
    Elem apply_derivation(const std::vector<Elem>& im, Deg udeg, const Elem& e) const {
        Elem out;
        for (auto& [m, c] : e.terms) {
            Deg prefix = 0;
            for (size_t i = 0; i < m.factors.size(); ++i) {
                auto [g, ex] = m.factors[i];
                if (!im[g].is_zero()) {
                    Monomial pre, post;
                    for (size_t j = 0; j < i; ++j) pre.factors.push_back(m.factors[j]);
                    Monomial mid;  // g^{ex-1}
                    if (ex > 1) mid.factors.push_back({g, ex - 1});
                    for (size_t j = i + 1; j < m.factors.size(); ++j)
                        post.factors.push_back(m.factors[j]);
                    Elem tail = mul(im[g], mul({{{mid, Rat(1)}}}, {{{post, Rat(1)}}}));
                    Elem head = mul({{{pre, Rat(1)}}}, tail);
                    int sgn = (is_odd(udeg) && is_odd(prefix)) ? -1 : 1;
                    out += (c * Rat(sgn) * Rat(ex)) * head;
                }
                prefix += ex * gens[g].degree;
            }
        }
        return reduce(out);
    }

    Elem d(const Elem& e) const { return apply_derivation(diff, 1, e); }

    /// Reduce by the quotient oracle when present.
    Elem reduce(const Elem& e) const {
        if (!oracle) return e;
        Elem cur = e;
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto& [m, c] : cur.terms) {
                if (m.poly_degree() > oracle->window)
                    throw window_error("quotient oracle: monomial exceeds window");
                auto it = oracle->reducers.find(m);
                if (it != oracle->reducers.end()) {
                    Rat coeff = c;
                    Elem repl = coeff * it->second;
                    cur.terms.erase(m);
                    cur += repl;
                    changed = true;
                    break;
                }
            }
        }
        return cur;
    }

    std::string mono_str(const Monomial& m) const {
        if (m.is_one()) return "1";
        std::string s;
        for (auto& [g, e] : m.factors) {
            if (!s.empty()) s += "*";
            s += gens[g].name;
            if (e > 1) s += "^" + std::to_string(e);
        }
        return s;
    }
    std::string str(const Elem& e) const {
        if (e.is_zero()) return "0";
        std::string s;
        for (auto& [m, c] : e.terms) {
            Rat a = c;
            bool neg = a < 0;
            if (neg) a = -a;
            if (s.empty())
                s += neg ? "-" : "";
            else
                s += neg ? " - " : " + ";
            if (a != 1 || m.is_one()) {
                s += rat_str(a);
                if (!m.is_one()) s += "*";
            }
            if (!m.is_one()) s += mono_str(m);
        }
        return s;
    }

  private:
    std::map<std::string, int> index_;
    friend AlgPtr make_algebra_impl(std::vector<Gen>, std::map<std::string, Elem>);
};

inline AlgPtr make_algebra_impl(std::vector<Gen> gs, std::map<std::string, Elem> d) {
    auto a = std::make_shared<Algebra>();
    a->gens = std::move(gs);
    for (int i = 0; i < (int)a->gens.size(); ++i) {
        if (a->index_.count(a->gens[i].name))
            throw argument_error("duplicate generator name: " + a->gens[i].name);
        a->index_[a->gens[i].name] = i;
    }
    a->diff.assign(a->gens.size(), Elem());
    for (auto& [name, img] : d) {
        int i = a->gen_index(name);
        if (!img.is_zero() && !a->homogeneous_of_degree(img, a->gens[i].degree + 1))
            throw argument_error("differential image of " + name + " has wrong degree");
        a->diff[i] = img;
    }
    return a;
}

inline AlgPtr Algebra::make(std::vector<Gen> gs, std::map<std::string, Elem> d) {
    return make_algebra_impl(std::move(gs), std::move(d));
}

/// d applied twice to every generator; passes iff all vanish (d^2 is a
/// derivation, so generators suffice).
inline Report check_square_zero(const Algebra& a) {
    Report r;
    for (int i = 0; i < a.n_gens(); ++i) {
        Elem dd = a.d(a.d(a.gen_elem(i)));
        r.require(dd.is_zero(), "d2." + a.gen_name(i),
                  dd.is_zero() ? "" : "d(d(" + a.gen_name(i) + ")) = " + a.str(dd));
    }
    return r;
}

/// Degree-preserving algebra morphism given on generators.
struct AlgMorphism {
    AlgPtr source, target;
    std::vector<Elem> images;  // per source generator

    Elem apply(const Elem& e) const {
        Elem out;
        for (auto& [m, c] : e.terms) {
            Elem t = Elem::one();
            for (auto& [g, ex] : m.factors) t = target->mul(t, target->pow(images[g], ex));
            out += c * t;
        }
        return target->reduce(out);
    }

    static AlgMorphism identity(const AlgPtr& a) {
        AlgMorphism f{a, a, {}};
        for (int i = 0; i < a->n_gens(); ++i) f.images.push_back(a->gen_elem(i));
        return f;
    }

    AlgMorphism compose(const AlgMorphism& inner) const {
        // this o inner
        AlgMorphism out{inner.source, target, {}};
        for (auto& im : inner.images) out.images.push_back(apply(im));
        return out;
    }

    Report check_chain_map() const {
        Report r;
        for (int i = 0; i < source->n_gens(); ++i) {
            Elem lhs = apply(source->d(source->gen_elem(i)));
            Elem rhs = target->d(images[i]);
            r.require(lhs == rhs, "chain." + source->gen_name(i),
                      lhs == rhs ? ""
                                 : "f(d " + source->gen_name(i) + ") = " + target->str(lhs) +
                                       " but d f = " + target->str(rhs));
        }
        return r;
    }
};

/// Derivation of an algebra, or along a morphism f0 (a derivation A -> B).
struct Derivation {
    AlgPtr algebra;  // source
    Deg degree = 0;
    std::vector<Elem> images;             // values on generators, in `target`
    AlgPtr target;                               // defaults to algebra
    std::shared_ptr<const AlgMorphism> along;    // optional f0 for Der(A,B)

    static Derivation zero(const AlgPtr& a, Deg deg) {
        return Derivation{a, deg, std::vector<Elem>(a->n_gens()), a, nullptr};
    }
    static Derivation partial(const AlgPtr& a, int gen) {
        Derivation u = zero(a, -a->gen_degree(gen));
        u.images[gen] = Elem::one();
        return u;
    }

    bool is_zero() const {
        for (auto& e : images)
            if (!e.is_zero()) return false;
        return true;
    }

    Elem apply(const Elem& e) const {
        if (!along) return algebra->apply_derivation(images, degree, e);
        // u(x y) = u(x) f0(y) + (-1)^{|u||x|} f0(x) u(y)
        Elem out;
        const Algebra& T = *target;
        for (auto& [m, c] : e.terms) {
            Deg prefix = 0;
            for (size_t i = 0; i < m.factors.size(); ++i) {
                auto [g, ex] = m.factors[i];
                if (!images[g].is_zero()) {
                    Monomial pre, mid, post;
                    for (size_t j = 0; j < i; ++j) pre.factors.push_back(m.factors[j]);
                    if (ex > 1) mid.factors.push_back({g, ex - 1});
                    for (size_t j = i + 1; j < m.factors.size(); ++j)
                        post.factors.push_back(m.factors[j]);
                    Elem pre_t = along->apply(Elem{{{pre, Rat(1)}}});
                    Elem mid_t = along->apply(Elem{{{mid, Rat(1)}}});
                    Elem post_t = along->apply(Elem{{{post, Rat(1)}}});
                    Elem t = T.mul(pre_t, T.mul(images[g], T.mul(mid_t, post_t)));
                    int sgn = (is_odd(degree) && is_odd(prefix)) ? -1 : 1;
                    out += (c * Rat(sgn) * Rat(ex)) * t;
                }
                prefix += ex * algebra->gen_degree(g);
            }
        }
        return T.reduce(out);
    }

    friend Derivation operator+(Derivation a, const Derivation& b) {
        for (int i = 0; i < (int)a.images.size(); ++i) a.images[i] += b.images[i];
        return a;
    }
    friend Derivation operator-(Derivation a, const Derivation& b) {
        for (int i = 0; i < (int)a.images.size(); ++i) a.images[i] -= b.images[i];
        return a;
    }
    friend Derivation operator*(const Rat& c, Derivation a) {
        for (auto& e : a.images) e = c * e;
        return a;
    }
    bool operator==(const Derivation& o) const { return images == o.images; }
};

/// Graded commutator [u,v] = u v - (-1)^{|u||v|} v u, by generator images.
inline Derivation der_bracket(const Derivation& u, const Derivation& v) {
    if (u.algebra != v.algebra) throw argument_error("der_bracket: different algebras");
    Derivation out = Derivation::zero(u.algebra, u.degree + v.degree);
    int sgn = (is_odd(u.degree) && is_odd(v.degree)) ? -1 : 1;
    for (int i = 0; i < u.algebra->n_gens(); ++i) {
        Elem uv = u.apply(v.images[i]);
        Elem vu = v.apply(u.images[i]);
        out.images[i] = uv - Rat(sgn) * vu;
    }
    return out;
}

/// d_{Der(A)} u = d_A o u - (-1)^{|u|} u o d_A.
inline Derivation der_differential(const Derivation& u) {
    Derivation out = Derivation::zero(u.algebra, u.degree + 1);
    int sgn = is_odd(u.degree) ? -1 : 1;
    for (int i = 0; i < u.algebra->n_gens(); ++i)
        out.images[i] =
            u.algebra->d(u.images[i]) - Rat(sgn) * u.apply(u.algebra->d(u.algebra->gen_elem(i)));
    return out;
}

/// a * u, the A-module structure on Der(A).
inline Derivation der_scale(const AlgPtr& A, const Elem& a, const Derivation& u) {
    Derivation out = u;
    Deg da = a.is_zero() ? 0 : A->degree_of(a);
    out.degree = u.degree + da;
    for (auto& e : out.images) e = A->mul(a, e);
    return out;
}

}  // namespace shlr
