#pragma once

#include "shlr/complex.hpp"
#include "shlr/lie.hpp"
#include "shlr/prng.hpp"

#include <memory>
#include <optional>

namespace shlr {

/// dg Lie-Rinehart pair (A, M): bracket table on module generators plus an
/// A-linear anchor into Der(A). Evaluation on elements uses
///   [x, a y] = (-1)^{|a||x|} a [x,y] + Gamma(x)(a) y
/// and graded antisymmetry.
struct DGLRPair {
    AlgPtr base;
    ModPtr module;
    // sorted pairs (i <= j); (i,i) only for odd generators
    std::map<std::pair<int, int>, ModElem> table;
    std::vector<Derivation> anchor;  // degree |gen| derivations of base
    std::optional<int> weight_cap;   // free pairs: total weight bound
    std::vector<int> weight_tag;     // per generator; empty = all 1

    int tag(int i) const { return weight_tag.empty() ? 1 : weight_tag[i]; }
    bool in_cap(int total) const { return !weight_cap || total <= *weight_cap; }

    ModElem bracket_gens(int i, int j) const {
        if (i <= j) {
            auto it = table.find({i, j});
            return it == table.end() ? ModElem() : it->second;
        }
        int s = (is_odd(module->gen_degree(i)) && is_odd(module->gen_degree(j))) ? -1 : 1;
        auto it = table.find({j, i});
        return it == table.end() ? ModElem() : Rat(-s) * it->second;
    }

    Derivation anchor_of(const ModElem& m) const {
        if (m.is_zero()) return Derivation::zero(base, 0);
        Derivation out = Derivation::zero(base, module->degree_of(m));
        for (auto& [g, c] : m.terms) {
            Derivation part = anchor[g];
            for (int i = 0; i < base->n_gens(); ++i) part.images[i] = base->mul(c, part.images[i]);
            for (int i = 0; i < base->n_gens(); ++i) out.images[i] += part.images[i];
        }
        return out;
    }

    /// Bracket of single terms (q c g).
    ModElem bracket_terms(const ArgTerm& s, const ArgTerm& t) const {
        const Algebra& A = *base;
        Rat q = s.q * t.q;
        Deg cs_deg = A.mono_degree(s.coeff), ct_deg = A.mono_degree(t.coeff);
        Deg gs_deg = module->gen_degree(s.gen), gt_deg = module->gen_degree(t.gen);
        Elem cs = Elem{{{s.coeff, Rat(1)}}}, ct = Elem{{{t.coeff, Rat(1)}}};
        ModElem out;
        // peel t's coefficient: [X, ct gt] = (-1)^{|ct||X|} ct [X, gt] + Gamma(X)(ct) gt
        int s1 = (is_odd(ct_deg) && is_odd(cs_deg + gs_deg)) ? -1 : 1;
        // [cs gs, gt] = -(-1)^{|cs gs||gt|} [gt, cs gs]
        //            = -(-1)^{(|cs|+|gs|)|gt|} ( (-1)^{|cs||gt|} cs [gt, gs] + Gamma(gt)(cs) gs )
        int s2 = (is_odd(cs_deg + gs_deg) && is_odd(gt_deg)) ? -1 : 1;
        int s3 = (is_odd(cs_deg) && is_odd(gt_deg)) ? -1 : 1;
        ModElem inner;
        inner += Rat(-s2 * s3) * module->scale(cs, bracket_gens(t.gen, s.gen));
        ModElem g_term;
        g_term.add_term(s.gen, Rat(-s2) * anchor[t.gen].apply(cs));
        inner += g_term;
        out += Rat(s1) * module->scale(ct, inner);
        // anchor term: Gamma(cs gs)(ct) gt = cs * Gamma(gs)(ct) * gt
        ModElem a_term;
        a_term.add_term(t.gen, A.mul(cs, anchor[s.gen].apply(ct)));
        out += a_term;
        return q * out;
    }

    ModElem bracket(const ModElem& x, const ModElem& y) const {
        ModElem out;
        for (auto& [gx, cx] : x.terms)
            for (auto& [mx, qx] : cx.terms)
                for (auto& [gy, cy] : y.terms)
                    for (auto& [my, qy] : cy.terms)
                        out += bracket_terms(ArgTerm{qx, mx, gx}, ArgTerm{qy, my, gy});
        return out;
    }
};

using LRPtr = std::shared_ptr<const DGLRPair>;

/// check_lr: antisymmetry is structural; verifies Leibniz (d and anchor),
/// Jacobi, anchor Lie-morphism and anchor chain-map, exactly, on generators
/// plus a seeded coefficient sample.
inline Report check_lr(const DGLRPair& P, unsigned long long seed = 0) {
    Report r;
    r.seed = seed;
    const auto& M = *P.module;
    const AlgPtr& A = P.base;
    int n = M.n_gens();
    auto name = [&](int i) { return M.gen_name(i); };

    // degree and table sanity
    for (auto& [ij, v] : P.table) {
        auto [i, j] = ij;
        if (!v.is_zero())
            r.require(M.homogeneous_of_degree(v, M.gen_degree(i) + M.gen_degree(j)),
                      "bracket_degree." + name(i) + "," + name(j), "bracket has wrong degree");
    }
    for (int i = 0; i < n; ++i)
        r.require(P.anchor[i].degree == M.gen_degree(i), "anchor_degree." + name(i),
                  "anchor degree mismatch");

    // sample coefficients: 1, generators of A, and a seeded random element
    std::vector<Elem> samples{Elem::one()};
    for (int i = 0; i < A->n_gens(); ++i) samples.push_back(A->gen_elem(i));
    SplitMix rng(seed + 1);
    if (A->n_gens() > 0) {
        int g = (int)(rng.next() % A->n_gens());
        samples.push_back(Rat(rng.small_int(3)) * A->gen_elem(g) +
                          (is_odd(A->gen_degree(g)) ? Elem() : Elem::one()));
    }

    bool capped = P.weight_cap.has_value();
    auto pair_ok = [&](int i, int j) { return !capped || P.in_cap(P.tag(i) + P.tag(j)); };
    auto triple_ok = [&](int i, int j, int k) {
        return !capped || P.in_cap(P.tag(i) + P.tag(j) + P.tag(k));
    };

    // d-Leibniz for the bracket
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (!pair_ok(i, j)) continue;
            ModElem lhs = M.d(P.bracket_gens(i, j));
            int s = is_odd(M.gen_degree(i)) ? -1 : 1;
            ModElem rhs = P.bracket(M.diff[i], ModElem::gen(j)) +
                          Rat(s) * P.bracket(ModElem::gen(i), M.diff[j]);
            r.require(lhs == rhs, "d_bracket." + name(i) + "," + name(j),
                      lhs == rhs ? "" : "d[x,y] != [dx,y] +- [x,dy]");
        }

    // Jacobi with sampled coefficients on the last slot
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (!triple_ok(i, j, k)) continue;
                for (size_t si = 0; si < samples.size(); ++si) {
                    const Elem& a = samples[si];
                    if (a.is_zero()) continue;
                    ModElem zk = M.scale(a, ModElem::gen(k));
                    ModElem lhs = P.bracket(ModElem::gen(i), P.bracket(ModElem::gen(j), zk));
                    ModElem r1 = P.bracket(P.bracket(ModElem::gen(i), ModElem::gen(j)), zk);
                    int s = (is_odd(M.gen_degree(i)) && is_odd(M.gen_degree(j))) ? -1 : 1;
                    ModElem r2 = P.bracket(ModElem::gen(j), P.bracket(ModElem::gen(i), zk));
                    ModElem defect = lhs - r1 - Rat(s) * r2;
                    bool ok = defect.is_zero();
                    r.require(ok,
                              "jacobi." + name(i) + "," + name(j) + "," + name(k) + "#" +
                                  std::to_string(si),
                              ok ? "" : "witness [" + name(i) + ",[" + name(j) + ",(" + A->str(a) +
                                            ")*" + name(k) + "]], defect = " + M.str(defect));
                    if (!ok) break;
                }
            }

    // Leibniz rule as stated: [m, a n] = Gamma(m)(a) n + (-1)^{|a||m|} a [m,n]
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (!pair_ok(i, j)) continue;
            const Elem& a = samples.back();
            ModElem lhs = P.bracket(ModElem::gen(i), M.scale(a, ModElem::gen(j)));
            ModElem t1;
            t1.add_term(j, P.anchor[i].apply(a));
            Deg da = a.is_zero() ? 0 : A->degree_of(a);
            int s = (is_odd(da) && is_odd(M.gen_degree(i))) ? -1 : 1;
            ModElem rhs = t1 + Rat(s) * M.scale(a, P.bracket_gens(i, j));
            r.require(lhs == rhs, "leibniz." + name(i) + "," + name(j),
                      lhs == rhs ? "" : "witness [" + name(i) + ",(" + A->str(a) + ")*" + name(j) +
                                            "], defect = " + M.str(lhs - rhs));
        }

    // anchor is a morphism of Lie algebras: Gamma[m,n] = [Gamma m, Gamma n]
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (!pair_ok(i, j)) continue;
            Derivation lhs = P.anchor_of(P.bracket_gens(i, j));
            Derivation rhs = der_bracket(P.anchor[i], P.anchor[j]);
            bool ok = lhs.images == rhs.images;
            r.require(ok, "anchor_lie." + name(i) + "," + name(j),
                      ok ? "" : "Gamma[x,y] != [Gamma x, Gamma y]");
        }

    // anchor chain map: Gamma(d m) = d_Der(Gamma m)
    for (int i = 0; i < n; ++i) {
        Derivation lhs = P.anchor_of(M.diff[i]);
        Derivation rhs = der_differential(P.anchor[i]);
        bool ok = lhs.images == rhs.images;
        r.require(ok, "anchor_chain." + name(i), ok ? "" : "anchor does not respect d");
    }
    return r;
}

/// Morphism of dg LR pairs (A,M) -> (B,N): algebra map f0 : B -> A and module
/// map f : M -> A (x)_B N (target stored base-changed over A).
struct LRMorphism {
    LRPtr source, target;
    AlgMorphism f0;           // target base -> source base
    ModMorphism f;            // source module -> base_change(f0, target module)

    static LRMorphism identity(const LRPtr& P) {
        AlgMorphism id0 = AlgMorphism::identity(P->base);
        auto tgt = base_change(id0, P->module);
        ModMorphism f{P->module, tgt, {}, 0};
        for (int i = 0; i < P->module->n_gens(); ++i) f.images.push_back(ModElem::gen(i));
        return LRMorphism{P, P, id0, f};
    }

    LRMorphism compose(const LRMorphism& inner) const {
        // this o inner : inner.source -> target
        AlgMorphism g0 = inner.f0.compose(f0);
        auto tgt = base_change(g0, target->module);
        ModMorphism comp{inner.source->module, tgt, {}, 0};
        for (int i = 0; i < inner.source->module->n_gens(); ++i) {
            ModElem mid = inner.f.images[i];  // over inner.source base, gens of middle
            ModElem out;
            for (auto& [g, c] : mid.terms) {
                ModElem img = f.images[g];  // over middle base... must be pushed
                out += tgt->scale(c, base_change_elem(inner.f0, img));
            }
            comp.images.push_back(out);
        }
        return LRMorphism{inner.source, target, g0, comp};
    }
};

/// Eq. (LRmor) on all generator pairs plus the anchored-module square.
inline Report check_lr_morphism(const LRMorphism& phi) {
    Report r;
    const DGLRPair& S = *phi.source;
    const DGLRPair& T = *phi.target;
    const AlgPtr& A = S.base;
    int n = S.module->n_gens();
    bool capped = S.weight_cap.has_value();

    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (capped && !S.in_cap(S.tag(i) + S.tag(j))) continue;
            ModElem lhs = phi.f.apply(S.bracket_gens(i, j));
            ModElem rhs;
            // f(m) = sum b_a (x) n_a ; f(m') = sum c_b (x) n'_b
            for (auto& [ga, ca] : phi.f.images[i].terms)
                for (auto& [ma, qa] : ca.terms)
                    for (auto& [gb, cb] : phi.f.images[j].terms)
                        for (auto& [mb, qb] : cb.terms) {
                            Deg dna = T.module->gen_degree(ga);
                            Deg dcb = A->mono_degree(mb);
                            int s = (is_odd(dna) && is_odd(dcb)) ? -1 : 1;
                            Elem prod = A->mul(Elem{{{ma, Rat(1)}}}, Elem{{{mb, Rat(1)}}});
                            ModElem br = base_change_elem(phi.f0, T.bracket_gens(ga, gb));
                            rhs += (qa * qb * Rat(s)) * phi.f.target->scale(prod, br);
                        }
            // + sum Gamma(m)(c_b) (x) n'_b
            for (auto& [gb, cb] : phi.f.images[j].terms) {
                ModElem t;
                t.add_term(gb, S.anchor[i].apply(cb));
                rhs += t;
            }
            // - (-1)^{|m||m'|} sum Gamma(m')(b_a) (x) n_a
            int sij =
                (is_odd(S.module->gen_degree(i)) && is_odd(S.module->gen_degree(j))) ? -1 : 1;
            for (auto& [ga, ca] : phi.f.images[i].terms) {
                ModElem t;
                t.add_term(ga, S.anchor[j].apply(ca));
                rhs -= Rat(sij) * t;
            }
            bool ok = lhs == rhs;
            r.require(ok, "lrmor." + S.module->gen_name(i) + "," + S.module->gen_name(j),
                      ok ? "" : "defect = " + phi.f.target->str(lhs - rhs));
        }

    // anchored square: Gamma_S(m) o f0 = sum b_a * f0 o Gamma_T(n_a), on B-generators
    for (int i = 0; i < n; ++i) {
        for (int y = 0; y < T.base->n_gens(); ++y) {
            Elem lhs = S.anchor[i].apply(phi.f0.images[y]);
            Elem rhs;
            for (auto& [ga, ca] : phi.f.images[i].terms)
                rhs += A->mul(ca, phi.f0.apply(T.anchor[ga].images[y]));
            bool ok = lhs == rhs;
            r.require(ok, "anchor_square." + S.module->gen_name(i) + "," + T.base->gen_name(y),
                      ok ? "" : "defect = " + A->str(lhs - rhs));
        }
        // chain-map of f
        ModElem c = phi.f.chain_defect(i);
        r.require(c.is_zero(), "module_chain." + S.module->gen_name(i),
                  c.is_zero() ? "" : "defect = " + phi.f.target->str(c));
    }
    return r;
}

/// Der(B) as a cell module over B (generators reversed for the lowering
/// condition), with conversions to honest derivations.
struct DerModule {
    AlgPtr B;
    ModPtr module;
    std::vector<int> gen_of_partial;  // module gen index of d/dy_j

    Derivation to_der(const ModElem& m) const {
        Deg deg = m.is_zero() ? 0 : module->degree_of(m);
        Derivation u = Derivation::zero(B, deg);
        for (auto& [g, c] : m.terms) {
            // g is the module gen for some partial
            for (int j = 0; j < B->n_gens(); ++j)
                if (gen_of_partial[j] == g) u.images[j] += c;
        }
        return u;
    }
    ModElem from_der(const Derivation& u) const {
        ModElem m;
        for (int j = 0; j < B->n_gens(); ++j) m.add_term(gen_of_partial[j], u.images[j]);
        return m;
    }
};

inline DerModule der_module(const AlgPtr& B) {
    std::vector<Gen> gens;
    std::vector<ModElem> diff;
    int n = B->n_gens();
    for (int j = 0; j < n; ++j) gens.push_back({"D" + B->gen_name(j), -B->gen_degree(j)});
    // d(partial_j) expressed through partials: (d u)(y_l) = -(-1)^{|u|} u(d y_l)
    for (int j = 0; j < n; ++j) {
        Derivation pj = Derivation::partial(B, j);
        Derivation dpj = der_differential(pj);
        ModElem img;
        for (int l = 0; l < n; ++l) img.add_term(l, dpj.images[l]);
        diff.push_back(img);
    }
    auto mod = make_cell_ordered(B, gens, diff);
    DerModule D;
    D.B = B;
    D.module = mod;
    D.gen_of_partial.resize(n);
    for (int j = 0; j < n; ++j) D.gen_of_partial[j] = mod->gen_index("D" + B->gen_name(j));
    return D;
}

/// Der(A, B) along f0 : A -> B, as a cell module over B with one generator
/// per A-generator.
struct DerAlongModule {
    std::shared_ptr<const AlgMorphism> f0;  // A -> B
    ModPtr module;
    std::vector<int> gen_of_delta;  // module gen per A-generator

    Derivation to_der(const ModElem& m) const {
        const AlgPtr& A = f0->source;
        Deg deg = m.is_zero() ? 0 : module->degree_of(m);
        Derivation u = Derivation::zero(A, deg);
        u.target = f0->target;
        u.along = f0;
        u.images.assign(A->n_gens(), Elem());
        for (auto& [g, c] : m.terms)
            for (int j = 0; j < A->n_gens(); ++j)
                if (gen_of_delta[j] == g) u.images[j] += c;
        return u;
    }
    ModElem from_der(const Derivation& u) const {
        ModElem m;
        for (int j = 0; j < (int)u.images.size(); ++j) m.add_term(gen_of_delta[j], u.images[j]);
        return m;
    }
};

inline DerAlongModule der_along_module(const AlgMorphism& f0) {
    auto f0p = std::make_shared<const AlgMorphism>(f0);
    const AlgPtr& A = f0.source;
    const AlgPtr& B = f0.target;
    int n = A->n_gens();
    std::vector<Gen> gens;
    for (int i = 0; i < n; ++i) gens.push_back({"d" + A->gen_name(i), -A->gen_degree(i)});
    std::vector<ModElem> diff(n);
    for (int i = 0; i < n; ++i) {
        Derivation di;
        di.algebra = A;
        di.degree = -A->gen_degree(i);
        di.target = B;
        di.along = f0p;
        di.images.assign(n, Elem());
        di.images[i] = Elem::one();
        // (d delta_i)(x_l) = d_B(delta_i x_l) - (-1)^{|delta_i|} delta_i(d_A x_l)
        int s = is_odd(di.degree) ? -1 : 1;
        ModElem img;
        for (int l = 0; l < n; ++l)
            img.add_term(l, Rat(-s) * di.apply(A->d(A->gen_elem(l))));
        diff[i] = img;
    }
    auto mod = make_cell_ordered(B, gens, diff);
    DerAlongModule D;
    D.f0 = f0p;
    D.module = mod;
    D.gen_of_delta.resize(n);
    for (int i = 0; i < n; ++i) D.gen_of_delta[i] = mod->gen_index("d" + A->gen_name(i));
    return D;
}

}  // namespace shlr
