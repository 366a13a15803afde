#pragma once

#include "shlr/homotopy.hpp"

namespace shlr {

/// Rectification (A, Mbar): the SH LR pair whose CE algebra extends the one
/// of (A, M) by generators xi_i' (degree |x_i|) and c_i' (degree |x_i|+1),
/// with the differential
///   d(x_i)   = c_i' + R(d_CE x_i),   d(m_j') = R(d_CE m_j'),
///   d(xi_i') = -c_i',                d(c_i') = 0,
/// where R renames each subset of x-occurrences to xi'-occurrences.
struct RectifiedPair {
    SHPtr source;
    SHPtr rectified;
    std::shared_ptr<TruncatedCE> source_ce;
    std::shared_ptr<TruncatedCE> rect_ce;
    GeneralSHMorphism counit;       // eps : (A, Mbar) -> (A, M)
    std::vector<int> xi_gen, c_gen;  // rect module generator per A-generator
};

/// The renaming operator on an element of the rectified CE: every subset of
/// x-occurrences is renamed to the matching xi' (same degree), with binomial
/// multiplicities.
inline Elem renaming_operator(const TruncatedCE& R, const std::vector<int>& xi_dual,
                              const Elem& e) {
    const Algebra& ce = *R.ce;
    Elem out;
    for (auto& [m, c] : e.terms) {
        std::vector<Elem> factors{c * Elem::one()};
        for (auto& [g, ex] : m.factors) {
            Elem base_pow = Elem::one();
            std::vector<Elem> branch;
            if (g < R.n_agens && xi_dual[g] >= 0) {
                Elem x = ce.gen_elem(g), xi = ce.gen_elem(xi_dual[g]);
                Elem sum;
                for (int r = 0; r <= ex; ++r)
                    sum += Rat(binomial(ex, r)) * ce.mul(ce.pow(x, ex - r), ce.pow(xi, r));
                branch.push_back(sum);
            } else {
                Monomial mm;
                mm.factors.push_back({g, ex});
                branch.push_back(Elem{{{mm, Rat(1)}}});
            }
            std::vector<Elem> next;
            for (auto& f : factors)
                for (auto& b : branch) next.push_back(ce.mul(f, b));
            factors = next;
        }
        for (auto& f : factors) out += f;
    }
    return out;
}

/// Reconstruct the multiderivation family from a truncated CE differential
/// (the inverse of the ce_complex dualization).
inline SHLRStructure shlr_from_ce(const AlgPtr& A, const ModPtr& module, const TruncatedCE& C,
                                  int W) {
    SHLRStructure S;
    S.base = A;
    S.module = module;
    S.W = W;
    S.higher_vanish = false;
    const CellModule& M = *module;
    // rho^k from the weight-k parts of Q(x_i)
    for (int k = 1; k <= W - 1; ++k)
        for (auto& t : symmetric_tuples(M, k)) {
            Derivation u = Derivation::zero(A, 1 + tuple_degree(M, t));
            bool nz = false;
            for (int i = 0; i < A->n_gens(); ++i) {
                Elem v = detail::ce_eval_bare(C, C.weight_part(C.Qimg[i], k), t);
                Elem a;
                for (auto& [mm, q] : v.terms) a += q * Elem{{{mm, Rat(1)}}};
                if (!a.is_zero()) nz = true;
                u.images[i] = a;
            }
            if (nz) S.set_rho(k + 1, t, u);
        }
    // D^k from the weight-k parts of Q(g'): the dualization placed
    //   F_g(T) = -(-1)^{|g'|} (-1)^{|c||g'|} c_g
    for (int k = 2; k <= W; ++k)
        for (auto& t : symmetric_tuples(M, k)) {
            ModElem val;
            Deg td = tuple_degree(M, t);
            for (int g = 0; g < M.n_gens(); ++g) {
                int dg = C.dual_gen(g);
                Elem F = detail::ce_eval_bare(C, C.weight_part(C.Qimg[dg], k), t);
                if (F.is_zero()) continue;
                Deg gdual = C.ce->gen_degree(dg);
                int s0 = is_odd(gdual) ? -1 : 1;
                Elem cg;
                for (auto& [mm, q] : F.terms) {
                    int s1 = (is_odd(C.ce->mono_degree(mm)) && is_odd(gdual)) ? -1 : 1;
                    cg += (q * Rat(-s0 * s1)) * Elem{{{mm, Rat(1)}}};
                }
                val.add_term(g, cg);
            }
            (void)td;
            if (!val.is_zero()) S.set_D(k, t, val);
        }
    return S;
}

inline RectifiedPair rectify(const SHPtr& S) {
    RectifiedPair R;
    R.source = S;
    auto C = std::make_shared<TruncatedCE>(ce_complex(S));
    R.source_ce = C;
    const AlgPtr& A = S->base;
    const CellModule& M = *S->module;
    int W = S->W;

    // rectified module generators: copies of M, then xi, then c
    std::vector<Gen> mgens = M.gens;
    R.xi_gen.resize(A->n_gens());
    R.c_gen.resize(A->n_gens());
    for (int i = 0; i < A->n_gens(); ++i) {
        R.xi_gen[i] = (int)mgens.size();
        mgens.push_back({"xi_" + A->gen_name(i), -A->gen_degree(i)});
    }
    for (int i = 0; i < A->n_gens(); ++i) {
        R.c_gen[i] = (int)mgens.size();
        mgens.push_back({"c_" + A->gen_name(i), -A->gen_degree(i) - 1});
    }

    // the rectified CE algebra
    std::vector<Gen> ce_gens = A->gens;
    for (auto& g : mgens) ce_gens.push_back({g.name + "'", -g.degree});
    auto rce = std::make_shared<TruncatedCE>();
    rce->ce = Algebra::make(ce_gens, {});
    rce->W = W;
    rce->n_agens = A->n_gens();

    // dual generator indices in the rectified CE
    std::vector<int> xi_dual(A->n_gens()), c_dual(A->n_gens());
    for (int i = 0; i < A->n_gens(); ++i) {
        xi_dual[i] = rce->ce->gen_index("xi_" + A->gen_name(i) + "'");
        c_dual[i] = rce->ce->gen_index("c_" + A->gen_name(i) + "'");
    }
    auto embed = [&](const Elem& e) {  // source CE -> rectified CE by names
        Elem out;
        for (auto& [m, c] : e.terms) {
            Monomial mm;
            for (auto& [g, ex] : m.factors)
                mm.factors.push_back({rce->ce->gen_index(C->ce->gen_name(g)), ex});
            std::sort(mm.factors.begin(), mm.factors.end());
            out += c * Elem{{{mm, Rat(1)}}};
        }
        return out;
    };

    rce->Qimg.assign(rce->ce->n_gens(), Elem());
    for (int i = 0; i < A->n_gens(); ++i) {
        Elem img = rce->ce->gen_elem(c_dual[i]);
        img += renaming_operator(*rce, xi_dual, embed(C->Qimg[i]));
        rce->Qimg[i] = rce->truncate_weight(img, W);
    }
    for (int j = 0; j < M.n_gens(); ++j) {
        Elem img = renaming_operator(*rce, xi_dual, embed(C->Qimg[C->dual_gen(j)]));
        rce->Qimg[rce->ce->gen_index(M.gen_name(j) + "'")] = rce->truncate_weight(img, W);
    }
    for (int i = 0; i < A->n_gens(); ++i) {
        rce->Qimg[xi_dual[i]] = -rce->ce->gen_elem(c_dual[i]);
        rce->Qimg[c_dual[i]] = Elem();
    }

    // extract the rectified structure; start from a differential-free module
    auto mod0 = CellModule::make(A, mgens, {}, false);
    rce->S = std::make_shared<SHLRStructure>();  // placeholder for evaluation
    {
        auto tmp = std::make_shared<SHLRStructure>();
        tmp->base = A;
        tmp->module = mod0;
        tmp->W = W;
        rce->S = tmp;
    }
    // module differential = weight-1 dual extraction
    std::vector<ModElem> d1(mgens.size());
    {
        // weight-1 part of Q on duals encodes D^1
        for (int g = 0; g < (int)mgens.size(); ++g) {
            ModElem val;
            for (int h = 0; h < (int)mgens.size(); ++h) {
                int dh = rce->dual_gen(h);
                Elem F = detail::ce_eval_bare(*rce, rce->weight_part(rce->Qimg[dh], 1), {g});
                if (F.is_zero()) continue;
                Deg hdual = rce->ce->gen_degree(dh);
                int s0 = is_odd(hdual) ? -1 : 1;
                Elem ch;
                for (auto& [mm, q] : F.terms) {
                    int s1 = (is_odd(rce->ce->mono_degree(mm)) && is_odd(hdual)) ? -1 : 1;
                    ch += (q * Rat(-s0 * s1)) * Elem{{{mm, Rat(1)}}};
                }
                val.add_term(h, ch);
            }
            d1[g] = val;
        }
    }
    auto mod = CellModule::make(A, mgens, d1, false);
    auto Sbar = std::make_shared<SHLRStructure>(shlr_from_ce(A, mod, *rce, W));
    R.rectified = Sbar;
    rce->S = Sbar;
    R.rect_ce = rce;

    // counit eps* : x_i -> x_i + xi_i', m_j' -> m_j'
    GeneralSHMorphism eps;
    eps.source = Sbar;
    eps.target = S;
    eps.src_ce = rce;
    eps.tgt_ce = C;
    eps.W = W;
    eps.images.assign(C->ce->n_gens(), Elem());
    for (int i = 0; i < A->n_gens(); ++i)
        eps.images[i] = rce->ce->gen_elem(i) + rce->ce->gen_elem(xi_dual[i]);
    for (int j = 0; j < M.n_gens(); ++j)
        eps.images[C->dual_gen(j)] = rce->ce->gen_elem(rce->ce->gen_index(M.gen_name(j) + "'"));
    R.counit = eps;
    return R;
}

/// The unique linear fbar with eps o fbar = f, for a general f : (B,N) ~> (A,M):
///   fbar*(x_i) = f*_0(x_i), fbar*(xi_i') = f*_{>0}(x_i),
///   fbar*(c_i') = d_CE(f*_{>0}(x_i)), fbar*(m_j') = f*(m_j').
inline GeneralSHMorphism rectify_adjoint(const RectifiedPair& R, const GeneralSHMorphism& f) {
    if (f.target != R.source) throw argument_error("rectify_adjoint: target mismatch");
    GeneralSHMorphism fbar;
    fbar.source = f.source;
    fbar.target = R.rectified;
    fbar.src_ce = f.src_ce;
    fbar.tgt_ce = R.rect_ce;
    fbar.W = std::min(f.W, R.rect_ce->W);
    const AlgPtr& A = R.source->base;
    fbar.images.assign(R.rect_ce->ce->n_gens(), Elem());
    for (int i = 0; i < A->n_gens(); ++i) {
        Elem w0 = f.src_ce->weight_part(f.images[i], 0);
        Elem hi = f.images[i] - w0;
        fbar.images[i] = w0;
        fbar.images[R.rect_ce->ce->gen_index("xi_" + A->gen_name(i) + "'")] = hi;
        fbar.images[R.rect_ce->ce->gen_index("c_" + A->gen_name(i) + "'")] =
            f.src_ce->apply_Q(hi, fbar.W);
    }
    for (int j = 0; j < R.source->module->n_gens(); ++j)
        fbar.images[R.rect_ce->ce->gen_index(R.source->module->gen_name(j) + "'")] =
            f.images[R.source_ce->dual_gen(j)];
    return fbar;
}

}  // namespace shlr
