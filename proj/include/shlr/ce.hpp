#pragma once

#include "shlr/shlr.hpp"

namespace shlr {

/// Weight-truncated Chevalley-Eilenberg algebra of an SH LR[1] structure:
/// the free graded-commutative algebra on the base generators x_i and the
/// dual module generators g' (|g'| = -|g|), with the square-zero derivation
/// Q dual to the multiderivation family. Weight = dual-generator count.
struct TruncatedCE {
    SHPtr S;
    AlgPtr ce;
    int W = 1;
    int n_agens = 0;
    std::vector<Elem> Qimg;  // one image per ce generator

    int dual_gen(int module_gen) const { return n_agens + module_gen; }
    bool is_dual(int ce_gen) const { return ce_gen >= n_agens; }

    int mono_weight(const Monomial& m) const {
        int w = 0;
        for (auto& [g, e] : m.factors)
            if (is_dual(g)) w += e;
        return w;
    }

    Elem truncate_weight(const Elem& e, int cap) const {
        Elem out;
        for (auto& [m, c] : e.terms)
            if (mono_weight(m) <= cap) out += c * Elem{{{m, Rat(1)}}};
        return out;
    }

    Elem weight_part(const Elem& e, int w) const {
        Elem out;
        for (auto& [m, c] : e.terms)
            if (mono_weight(m) == w) out += c * Elem{{{m, Rat(1)}}};
        return out;
    }

    /// Q extended as a degree-1 derivation, truncated at weight `cap`.
    Elem apply_Q(const Elem& e, int cap) const {
        return truncate_weight(ce->apply_derivation(Qimg, 1, e), cap);
    }

    /// Embed an element of A into the CE algebra (generator-name preserving).
    Elem embed_base(const Elem& a) const {
        Elem out;
        for (auto& [m, c] : a.terms) out += c * Elem{{{m, Rat(1)}}};
        return out;
    }

    /// d^2 = 0 through the determined weight components: on x_i the weight-n
    /// component corresponds to Maurer-Cartan at arity n, on duals to the
    /// L-infinity relation at arity n.
    Report check_d2() const {
        Report r;
        r.bounds = "W=" + std::to_string(W);
        int mc_max = S->mc_arity_max();
        int linf_max = S->linf_arity_max();
        for (int i = 0; i < ce->n_gens(); ++i) {
            bool dual = is_dual(i);
            int cap = dual ? linf_max : mc_max;
            Elem qq = apply_Q(apply_Q(ce->gen_elem(i), cap + 1), cap);
            bool ok = qq.is_zero();
            r.require(ok, std::string("d2.") + ce->gen_name(i),
                      ok ? "" : "Q(Q(" + ce->gen_name(i) + ")) = " + ce->str(qq));
        }
        return r;
    }
};

namespace detail {

/// Contraction by module generator g: the degree-|g| derivation of the CE
/// algebra killing everything except the matching dual generator.
inline Derivation contraction(const TruncatedCE& C, int g) {
    Derivation io = Derivation::zero(C.ce, C.S->module->gen_degree(g));
    io.images[C.dual_gen(g)] = Elem::one();
    return io;
}

/// Evaluate a weight-w CE element against a sorted bare tuple: apply the
/// contractions in tuple order, then keep the dual-free part.
inline Elem ce_eval_bare(const TruncatedCE& C, const Elem& phi, const std::vector<int>& tuple) {
    Elem v = phi;
    for (int g : tuple) v = contraction(C, g).apply(v);
    Elem out;
    for (auto& [m, c] : v.terms)
        if (C.mono_weight(m) == 0) out += c * Elem{{{m, Rat(1)}}};
    return out;
}

/// The A-multilinear function on Sym^w M realized by a weight-w CE element,
/// with SymMap coefficient semantics.
inline SymMap ce_to_symmap(const TruncatedCE& C, const Elem& phi, int w, Deg phi_deg,
                           const ModPtr& unit_target) {
    SymMap F = SymMap::zero(C.S->module, unit_target, std::max(w, 1), phi_deg);
    for (auto& t : symmetric_tuples(*C.S->module, w)) {
        Elem val = ce_eval_bare(C, phi, t);
        if (val.is_zero()) continue;
        ModElem mv;
        // values land in A; re-read the CE element as an A element
        Elem a;
        for (auto& [m, c] : val.terms) a += c * Elem{{{m, Rat(1)}}};
        mv.add_term(0, a);
        F.values[t] = mv;
    }
    return F;
}

/// Convert a function on sorted bare w-tuples (values in A) into the unique
/// weight-w CE element realizing it under ce_eval_bare semantics.
inline Elem function_to_ce(const TruncatedCE& C, int w,
                           const std::function<Elem(const std::vector<int>&)>& F) {
    Elem out;
    for (auto& t : symmetric_tuples(*C.S->module, w)) {
        Elem val = F(t);
        if (val.is_zero()) continue;
        // dual monomial of the tuple
        Elem psi = Elem::one();
        for (int g : t) psi = C.ce->mul(psi, C.ce->gen_elem(C.dual_gen(g)));
        if (psi.is_zero()) continue;  // odd square: tuple not in Sym
        Elem eta = ce_eval_bare(C, psi, t);
        Rat eta_q = eta.terms.begin()->second;  // +- product of multiplicities
        // moving the contractions across the coefficient twists by
        // (-1)^{|c| * sum |g|}
        Deg tsum = 0;
        for (int g : t) tsum += C.S->module->gen_degree(g);
        Elem coeff;
        for (auto& [m, c] : val.terms) {
            int s = (is_odd(C.ce->mono_degree(m)) && is_odd(tsum)) ? -1 : 1;
            coeff += (c * Rat(s) / eta_q) * Elem{{{m, Rat(1)}}};
        }
        out += C.ce->mul(coeff, psi);
    }
    return out;
}

}  // namespace detail

/// Build the truncated CE algebra with the Cartan-formula differential:
///   d(x_i) = sum_k sigma^k(x_i) (dual to rho),
///   d(g')  = sum_k d^k(g')     (dual to D),
/// realized uniformly through evaluations.
inline TruncatedCE ce_complex(const SHPtr& S) {
    TruncatedCE C;
    C.S = S;
    C.W = S->W;
    const AlgPtr& A = S->base;
    C.n_agens = A->n_gens();
    std::vector<Gen> gens = A->gens;
    for (auto& g : S->module->gens) gens.push_back({g.name + "'", -g.degree});
    C.ce = Algebra::make(gens, {});

    const CellModule& M = *S->module;
    auto unit = CellModule::make(A, {{"1", 0}}, {});

    // Q on base generators: weight-k part realizes T -> rho^k(T)(x_i)
    C.Qimg.assign(C.ce->n_gens(), Elem());
    for (int i = 0; i < C.n_agens; ++i) {
        Elem img;
        for (int k = 0; k <= S->W - 1; ++k) {
            if (k == 0) {
                img += C.embed_base(A->diff[i]);
                continue;
            }
            img += detail::function_to_ce(C, k, [&](const std::vector<int>& t) {
                return S->rho_value(k + 1, t).images[i];
            });
        }
        C.Qimg[i] = img;
    }
    // Q on dual generators by the Cartan formula with Phi = g':
    //   eval(Q g', tuple of size k) = -(-1)^{|g'|} Phi~(D^k(tuple))
    for (int g = 0; g < M.n_gens(); ++g) {
        int dg = C.dual_gen(g);
        Deg phi_deg = C.ce->gen_degree(dg);
        int s = is_odd(phi_deg) ? -1 : 1;
        SymMap phi_map = SymMap::zero(S->module, unit, 1, phi_deg);
        phi_map.values[{g}] = ModElem::gen(0);
        Elem img;
        for (int k = 1; k <= S->W; ++k) {
            img += detail::function_to_ce(C, k, [&](const std::vector<int>& t) {
                ModElem dk = S->D_value(k, t);
                if (dk.is_zero()) return Elem();
                ModElem contracted = phi_map.eval({dk});
                Elem out;
                for (auto& [gg, c] : contracted.terms) out += c;
                return Rat(-s) * out;
            });
        }
        C.Qimg[dg] = img;
    }
    return C;
}

/// TruncatedComplex view of the CE algebra inside a window (weight <= W).
inline TruncatedComplex ce_truncate(const TruncatedCE& C, const Window& w) {
    TruncatedComplex out;
    out.w = w;
    auto monos = window_monomials(*C.ce, w.poly_degree_max);
    for (auto& m : monos) {
        if (C.mono_weight(m) > C.W) continue;
        Deg d = C.ce->mono_degree(m);
        if (!w.contains(d)) continue;
        out.basis[d].add(C.ce->mono_str(m));
    }
    for (auto& [d, b] : out.basis) {
        SparseMat mat(out.dim(d + 1), b.size());
        for (int j = 0; j < b.size(); ++j) {
            Elem mono = parse_elem(*C.ce, b.labels[j]);
            Elem dm;
            try {
                dm = C.apply_Q(mono, C.W);
            } catch (const window_error&) {
                if (d + 1 <= w.degree_max) out.flag_column(d, j);
                continue;
            }
            auto bit = out.basis.find(d + 1);
            for (auto& [mm, q] : dm.terms) {
                int row = -1;
                if (bit != out.basis.end()) {
                    auto it = bit->second.pos.find(C.ce->mono_str(mm));
                    if (it != bit->second.pos.end()) row = it->second;
                }
                if (row < 0) {
                    if (d + 1 <= w.degree_max) out.flag_column(d, j);
                    continue;
                }
                mat.add(row, j, q);
            }
        }
        out.dmat[d] = std::move(mat);
    }
    return out;
}

}  // namespace shlr
