#pragma once

#include "shlr/free_lr.hpp"

namespace shlr {

/// Pullback (B, f0^! M) of a dg LR pair (A, M) along f0 : A -> B, realized as
/// the split model Der(B)-leg (+) Ker-leg of
///   Der(B) x_{Der(A,B)} B (x)_A M.
struct LRPullbackResult {
    LRPtr pair;           // over B
    LRMorphism proj;      // (f0, p) : (B, f0^! M) -> (A, M)
    DerModule derB;       // conversions for the Der(B) component
    ModMorphism to_der;   // module -> derB.module (anchor projection)
    ModMorphism to_mod;   // module -> B (x)_A M
    // decompose a compatible pair (derivation component, module component)
    // into fiber-product coordinates
    std::function<ModElem(const ModElem&, const ModElem&)> decompose;
};

namespace detail {
/// fiber_product keeping the decomposition closure.
struct FPData {
    FiberProduct fp;
    std::function<ModElem(const ModElem&, const ModElem&)> decompose;
};

inline FPData fiber_product_with_decompose(const ModMorphism& f, const ModMorphism& g,
                                            const Window& w) {
    const ModPtr M = f.source;
    const ModPtr N = g.source;
    const ModPtr P0 = f.target;
    FiberProduct fp = fiber_product(f, g, w);
    // rebuild the section data used by fiber_product (deterministic, so the
    // same section comes out)
    std::vector<ModElem> gimages = g.images;
    std::vector<ModElem> section(P0->n_gens());
    for (int i = 0; i < P0->n_gens(); ++i) {
        auto sol = solve_a_combination(P0, gimages, ModElem::gen(i), w);
        ModElem s;
        for (int j = 0; j < N->n_gens(); ++j) s += N->scale((*sol)[j], ModElem::gen(j));
        section[i] = s;
    }
    auto apply_section = [section, N](const ModElem& p) {
        ModElem out;
        for (auto& [i, c] : p.terms) out += N->scale(c, section[i]);
        return out;
    };
    std::vector<ModElem> mleg_n(M->n_gens());
    for (int i = 0; i < M->n_gens(); ++i) mleg_n[i] = apply_section(f.images[i]);
    std::vector<int> kgens;
    std::vector<ModElem> kappa;
    std::map<int, int> fpidx_m, fpidx_k;
    for (int i = 0; i < fp.module->n_gens(); ++i) {
        const std::string& nm = fp.module->gen_name(i);
        if (nm.rfind("fp_", 0) == 0)
            fpidx_m[M->gen_index(nm.substr(3))] = i;
        else
            fpidx_k[N->gen_index(nm.substr(3))] = i;
    }
    for (auto& [j, idx] : fpidx_k) {
        kgens.push_back(j);
        kappa.push_back(ModElem::gen(j) - apply_section(g.images[j]));
    }
    FPData out;
    out.fp = fp;
    out.decompose = [=](const ModElem& x, const ModElem& y) {
        ModElem res;
        ModElem rem = y;
        for (auto& [i, c] : x.terms) {
            res.add_term(fpidx_m.at(i), c);
            rem -= N->scale(c, mleg_n[i]);
        }
        auto sol = solve_a_combination(N, kappa, rem, w);
        if (!sol) throw window_error("fiber product decomposition escapes the window");
        for (size_t k = 0; k < kappa.size(); ++k)
            res.add_term(fpidx_k.at(kgens[k]), (*sol)[k]);
        return res;
    };
    return out;
}
}  // namespace detail

inline LRPullbackResult pullback(const AlgMorphism& f0, const LRPtr& P, const Window& w) {
    const AlgPtr& A = f0.source;
    const AlgPtr& B = f0.target;
    if (P->base != A) throw argument_error("pullback: pair not over the source of f0");

    DerModule derB = der_module(B);
    DerAlongModule derAB = der_along_module(f0);
    auto MB = base_change(f0, P->module);

    // alpha : Der(B) -> Der(A,B), u -> u o f0
    ModMorphism alpha{derB.module, derAB.module, {}, 0};
    alpha.images.resize(derB.module->n_gens());
    for (int j = 0; j < B->n_gens(); ++j) {
        Derivation pj = Derivation::partial(B, j);
        ModElem img;
        for (int i = 0; i < A->n_gens(); ++i)
            img.add_term(derAB.gen_of_delta[i], pj.apply(f0.images[i]));
        alpha.images[derB.gen_of_partial[j]] = img;
    }
    // beta : B (x) M -> Der(A,B), b (x) m -> b f0 o Gamma(m)
    ModMorphism beta{MB, derAB.module, {}, 0};
    beta.images.resize(MB->n_gens());
    for (int g = 0; g < MB->n_gens(); ++g) {
        ModElem img;
        for (int i = 0; i < A->n_gens(); ++i)
            img.add_term(derAB.gen_of_delta[i], f0.apply(P->anchor[g].images[i]));
        beta.images[g] = img;
    }

    detail::FPData fpd;
    bool der_is_mleg = true;
    try {
        fpd = detail::fiber_product_with_decompose(alpha, beta, w);
    } catch (const precondition_error&) {
        fpd = detail::fiber_product_with_decompose(beta, alpha, w);
        der_is_mleg = false;
    }
    const FiberProduct& fp = fpd.fp;

    ModMorphism to_der = der_is_mleg ? fp.to_m : fp.to_n;
    ModMorphism to_mod = der_is_mleg ? fp.to_n : fp.to_m;
    auto decompose = [fpd, der_is_mleg](const ModElem& dcomp, const ModElem& mcomp) {
        return der_is_mleg ? fpd.decompose(dcomp, mcomp) : fpd.decompose(mcomp, dcomp);
    };

    auto Q = std::make_shared<DGLRPair>();
    Q->base = B;
    Q->module = fp.module;
    int n = fp.module->n_gens();
    Q->anchor.resize(n, Derivation::zero(B, 0));
    for (int i = 0; i < n; ++i) {
        Q->anchor[i] = derB.to_der(to_der.images[i]);
        if (to_der.images[i].is_zero()) Q->anchor[i].degree = fp.module->gen_degree(i);
    }

    // bracket per the pullback formula
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            bool odd_i = is_odd(fp.module->gen_degree(i));
            bool odd_j = is_odd(fp.module->gen_degree(j));
            if (i == j && !odd_i) continue;
            const Derivation& rho = Q->anchor[i];
            const Derivation& rhop = Q->anchor[j];
            const ModElem& x = to_mod.images[i];
            const ModElem& y = to_mod.images[j];
            ModElem ncomp;
            for (auto& [ga, ca] : x.terms)
                for (auto& [ma, qa] : ca.terms)
                    for (auto& [gb, cb] : y.terms)
                        for (auto& [mb, qb] : cb.terms) {
                            Deg dma = P->module->gen_degree(ga);
                            Deg dcb = B->mono_degree(mb);
                            int s = (is_odd(dma) && is_odd(dcb)) ? -1 : 1;
                            Elem prod = B->mul(Elem{{{ma, Rat(1)}}}, Elem{{{mb, Rat(1)}}});
                            ModElem br = base_change_elem(f0, P->bracket_gens(ga, gb));
                            ncomp += (qa * qb * Rat(s)) * MB->scale(prod, br);
                        }
            for (auto& [gb, cb] : y.terms) {
                ModElem t;
                t.add_term(gb, rho.apply(cb));
                ncomp += t;
            }
            for (auto& [ga, ca] : x.terms) {
                Deg dterm = B->degree_of(ca) + P->module->gen_degree(ga);
                int s = (is_odd(rhop.degree) && is_odd(dterm)) ? -1 : 1;
                ModElem t;
                t.add_term(ga, rhop.apply(ca));
                ncomp -= Rat(s) * t;
            }
            Derivation dcomp = der_bracket(rho, rhop);
            ModElem val = decompose(derB.from_der(dcomp), ncomp);
            if (!val.is_zero()) Q->table[{i, j}] = val;
        }

    LRPullbackResult out;
    out.pair = Q;
    out.derB = derB;
    out.to_der = to_der;
    out.to_mod = to_mod;
    out.decompose = decompose;
    out.proj = LRMorphism{Q, P, f0, to_mod};
    return out;
}

/// Unique factorization (f0, f) = (f0, p) o (Id, fbar) through the pullback.
/// fbar is determined by its two legs; the determination is asserted exactly.
inline LRMorphism factor_through_pullback(const LRMorphism& phi, const LRPullbackResult& pb) {
    const LRPtr& S = phi.source;
    ModMorphism fbar{S->module, pb.pair->module, {}, 0};
    for (int i = 0; i < S->module->n_gens(); ++i) {
        ModElem dcomp = pb.derB.from_der(S->anchor[i]);
        fbar.images.push_back(pb.decompose(dcomp, phi.f.images[i]));
    }
    // legs determine fbar: assert to_der o fbar = anchor and to_mod o fbar = f
    for (int i = 0; i < S->module->n_gens(); ++i) {
        ModElem leg1 = pb.to_der.apply(fbar.images[i]);
        if (!(leg1 == pb.derB.from_der(S->anchor[i])))
            throw precondition_error("factor_through_pullback: Der-leg mismatch");
        ModElem leg2 = pb.to_mod.apply(fbar.images[i]);
        if (!(leg2 == phi.f.images[i]))
            throw precondition_error("factor_through_pullback: module-leg mismatch");
    }
    AlgMorphism idB = AlgMorphism::identity(S->base);
    // target of fbar as a ModMorphism must be the base-changed module (trivial here)
    ModMorphism fb{S->module, base_change(idB, pb.pair->module), fbar.images, 0};
    return LRMorphism{S, pb.pair, idB, fb};
}

}  // namespace shlr
