#pragma once

#include "shlr/algebra.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace shlr {

/// Sparse element of a free graded module: generator index -> coefficient.
struct ModElem {
    std::map<int, Elem> terms;

    static ModElem zero() { return {}; }
    static ModElem gen(int i) {
        ModElem m;
        m.terms[i] = Elem::one();
        return m;
    }
    bool is_zero() const { return terms.empty(); }

    void add_term(int g, const Elem& c) {
        if (c.is_zero()) return;
        auto it = terms.find(g);
        if (it == terms.end()) {
            terms[g] = c;
        } else {
            it->second += c;
            if (it->second.is_zero()) terms.erase(it);
        }
    }
    ModElem& operator+=(const ModElem& o) {
        for (auto& [g, c] : o.terms) add_term(g, c);
        return *this;
    }
    ModElem& operator-=(const ModElem& o) {
        for (auto& [g, c] : o.terms) add_term(g, Rat(-1) * c);
        return *this;
    }
    friend ModElem operator+(ModElem a, const ModElem& b) { return a += b; }
    friend ModElem operator-(ModElem a, const ModElem& b) { return a -= b; }
    friend ModElem operator*(const Rat& c, ModElem a) {
        if (c == 0) return ModElem();
        for (auto& [g, e] : a.terms) e = c * e;
        return a;
    }
    friend ModElem operator-(ModElem a) { return Rat(-1) * std::move(a); }
    bool operator==(const ModElem& o) const { return terms == o.terms; }
};

class CellModule;
using ModPtr = std::shared_ptr<const CellModule>;

/// Free graded module over an Algebra with well-ordered generators whose
/// differential lands in strictly earlier generators (lowering condition).
class CellModule {
  public:
    AlgPtr base;
    std::vector<Gen> gens;
    std::vector<ModElem> diff;  // one image per generator

    static ModPtr make(AlgPtr base, std::vector<Gen> gens, std::vector<ModElem> diff_images,
                       bool require_lowering = true) {
        auto m = std::make_shared<CellModule>();
        m->base = std::move(base);
        m->gens = std::move(gens);
        if (diff_images.empty()) diff_images.assign(m->gens.size(), ModElem());
        if (diff_images.size() != m->gens.size())
            throw argument_error("CellModule: differential image count mismatch");
        m->diff = std::move(diff_images);
        for (size_t i = 0; i < m->gens.size(); ++i) {
            if (m->index_.count(m->gens[i].name))
                throw argument_error("duplicate module generator: " + m->gens[i].name);
            m->index_[m->gens[i].name] = (int)i;
        }
        for (size_t i = 0; i < m->gens.size(); ++i) {
            if (!m->diff[i].is_zero() &&
                !m->homogeneous_of_degree(m->diff[i], m->gens[i].degree + 1))
                throw argument_error("module differential image of " + m->gens[i].name +
                                     " has wrong degree");
            if (require_lowering)
                for (auto& [g, c] : m->diff[i].terms)
                    if (g >= (int)i)
                        throw argument_error("lowering condition violated at generator " +
                                             m->gens[i].name);
        }
        // d^2 = 0 on generators
        for (size_t i = 0; i < m->gens.size(); ++i) {
            ModElem dd = m->d(m->diff[i]);
            if (!dd.is_zero())
                throw argument_error("module d^2 != 0 at generator " + m->gens[i].name);
        }
        return m;
    }

    static ModPtr zero_module(AlgPtr base) { return make(std::move(base), {}, {}); }

    int n_gens() const { return (int)gens.size(); }
    int gen_index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw argument_error("unknown module generator: " + name);
        return it->second;
    }
    bool has_gen(const std::string& n) const { return index_.count(n) != 0; }
    const std::string& gen_name(int i) const { return gens[i].name; }
    Deg gen_degree(int i) const { return gens[i].degree; }

    Deg degree_of(const ModElem& m) const {
        if (m.is_zero()) throw argument_error("degree of zero module element");
        auto& [g0, c0] = *m.terms.begin();
        Deg d = base->degree_of(c0) + gens[g0].degree;
        for (auto& [g, c] : m.terms)
            if (base->degree_of(c) + gens[g].degree != d)
                throw argument_error("module element not homogeneous");
        return d;
    }
    bool homogeneous_of_degree(const ModElem& m, Deg d) const {
        for (auto& [g, c] : m.terms)
            for (auto& [mono, q] : c.terms)
                if (base->mono_degree(mono) + gens[g].degree != d) return false;
        return true;
    }

    ModElem scale(const Elem& a, const ModElem& m) const {
        ModElem out;
        for (auto& [g, c] : m.terms) out.add_term(g, base->mul(a, c));
        return out;
    }

    /// d(a m) = d_A a * m + (-1)^{|a|} a d m, from generator images.
    ModElem d(const ModElem& m) const {
        ModElem out;
        for (auto& [g, c] : m.terms) {
            out.add_term(g, base->d(c));
            if (!diff[g].is_zero()) {
                Elem signed_c = c;
                // (-1)^{|a|} a, per monomial of the coefficient
                Elem adj;
                for (auto& [mono, q] : c.terms) {
                    int s = is_odd(base->mono_degree(mono)) ? -1 : 1;
                    adj += (q * Rat(s)) * Elem{{{mono, Rat(1)}}};
                }
                out += scale(adj, diff[g]);
            }
        }
        return out;
    }

    std::string str(const ModElem& m) const {
        if (m.is_zero()) return "0";
        std::string s;
        for (auto& [g, c] : m.terms) {
            if (!s.empty()) s += " + ";
            s += "(" + base->str(c) + ")*" + gens[g].name;
        }
        return s;
    }

  private:
    std::map<std::string, int> index_;
};

/// (-1)^{|a|} a, the sign twist used when moving coefficients across a shift.
inline Elem sign_by_degree(const Algebra& A, const Elem& a) {
    Elem out;
    for (auto& [m, c] : a.terms) {
        int s = is_odd(A.mono_degree(m)) ? -1 : 1;
        out += (c * Rat(s)) * Elem{{{m, Rat(1)}}};
    }
    return out;
}

/// Shift a module by `shift` (new degree = old + shift, cohomological
/// convention M[1]^i = M^{i+1} gives shift = -1 for M[1]).
/// Differential images are transported with d[1] = -d on the nose; the Koszul
/// twist of the module action is handled by shift_elem.
inline ModPtr shift_module(const ModPtr& M, int shift, const std::string& suffix = "") {
    std::vector<Gen> gens;
    for (auto& g : M->gens) gens.push_back({g.name + suffix, g.degree + shift});
    std::vector<ModElem> diff;
    int dsign = (shift % 2 != 0) ? -1 : 1;
    for (auto& img : M->diff) {
        ModElem t;
        for (auto& [g, c] : img.terms) t.add_term(g, Rat(dsign) * sign_by_degree(*M->base, c));
        diff.push_back(t);
    }
    return CellModule::make(M->base, gens, diff);
}

/// Transport an element across the shift: a*g  ->  (-1)^{|a| * shift} a * g'.
inline ModElem shift_elem(const CellModule& from, const ModElem& m, int shift) {
    ModElem out;
    for (auto& [g, c] : m.terms)
        out.add_term(g, (shift % 2 != 0) ? sign_by_degree(*from.base, c) : c);
    return out;
}

/// Morphism of modules over a fixed base (target possibly a base-changed
/// module): generator images, degree `degree` (0 for chain maps).
struct ModMorphism {
    ModPtr source, target;
    std::vector<ModElem> images;
    Deg degree = 0;

    ModElem apply(const ModElem& m) const {
        ModElem out;
        for (auto& [g, c] : m.terms) {
            Elem cc = c;
            if (is_odd(degree)) cc = sign_by_degree(*source->base, c);
            out += target->scale(cc, images[g]);
        }
        return out;
    }

    static ModMorphism identity(const ModPtr& m) {
        ModMorphism f{m, m, {}, 0};
        for (int i = 0; i < m->n_gens(); ++i) f.images.push_back(ModElem::gen(i));
        return f;
    }
    static ModMorphism zero(const ModPtr& s, const ModPtr& t, Deg deg = 0) {
        return ModMorphism{s, t, std::vector<ModElem>(s->n_gens()), deg};
    }

    ModMorphism compose(const ModMorphism& inner) const {
        ModMorphism out{inner.source, target, {}, Deg(degree + inner.degree)};
        for (auto& im : inner.images) out.images.push_back(apply(im));
        return out;
    }

    /// d_target o f - (-1)^{|f|} f o d_source on generators.
    ModElem chain_defect(int gen) const {
        int s = is_odd(degree) ? -1 : 1;
        return target->d(images[gen]) - Rat(s) * apply(source->diff[gen]);
    }
    Report check_chain_map() const {
        Report r;
        for (int i = 0; i < source->n_gens(); ++i) {
            ModElem c = chain_defect(i);
            r.require(c.is_zero(), "chain." + source->gen_name(i),
                      c.is_zero() ? "" : "defect = " + target->str(c));
        }
        return r;
    }
};

/// A (x)_B N along f0 : B -> A : same generators, coefficients pushed through.
inline ModPtr base_change(const AlgMorphism& f0, const ModPtr& N) {
    if (N->base != f0.source) throw argument_error("base_change: module not over f0 source");
    std::vector<ModElem> diff;
    for (auto& img : N->diff) {
        ModElem t;
        for (auto& [g, c] : img.terms) t.add_term(g, f0.apply(c));
        diff.push_back(t);
    }
    return CellModule::make(f0.target, N->gens, diff);
}

inline ModElem base_change_elem(const AlgMorphism& f0, const ModElem& m) {
    ModElem out;
    for (auto& [g, c] : m.terms) out.add_term(g, f0.apply(c));
    return out;
}

}  // namespace shlr
