#pragma once

#include "shlr/rectify.hpp"

namespace shlr {

/// Coordinates of an A-multilinear map (given as a SymMap) in a HomComplexView
/// degree slice; throws window_error when a value escapes.
inline std::vector<Rat> hom_coords_or_throw(const HomComplexView& V, const SymMap& u, Deg d,
                                            const std::string& what) {
    auto c = V.coords_of(u, d);
    if (!c) throw window_error("window too small for " + what);
    return *c;
}

/// Lemma 18: factor a linear SH morphism over a fixed base through the
/// mapping cylinder: a strict cell inclusion followed by a linear morphism
/// extending f by zero on the new cells, with corrections solved in the
/// Hom-complex.
struct Factorization {
    SHPtr mbar;
    LinearSHMorphism include;  // strict i : M ~> Mbar
    LinearSHMorphism project;  // linear p : Mbar ~> N with f = p o i
};

/// Caller-supplied module decomposition M -> Mbar ->> N of f^1: the module
/// (with the source generators as a prefix), the projection images, and a
/// generator-level section of p^1 used for the provisional lifts.
struct GivenDecomposition {
    ModPtr mbar;                       // source generators first
    std::vector<ModElem> p1_images;    // per mbar generator, in N
    std::vector<ModElem> section;      // per N generator, in mbar
};

inline Factorization factorize_fixed_base(const LinearSHMorphism& f, const Window& w,
                                          const std::optional<GivenDecomposition>& given = {});

inline Factorization factorize_fixed_base(const LinearSHMorphism& f, const Window& w,
                                          const std::optional<GivenDecomposition>& given) {
    const SHPtr& S = f.source;
    const SHPtr& T = f.target;
    if (f.f0.source != f.f0.target)
        throw argument_error("factorize_fixed_base: morphism must live over a fixed base");
    const AlgPtr& A = S->base;
    const CellModule& M = *S->module;
    const CellModule& N = *T->module;
    int W = std::min(f.W, std::min(S->W, T->W));

    // module decomposition: caller-supplied, or the standard mapping cylinder
    int n_old = M.n_gens();
    ModPtr mbar_mod;
    AlgMorphism id0 = AlgMorphism::identity(A);
    auto n_changed = base_change(id0, T->module);
    SymMap p1;
    std::vector<ModElem> section_n;  // generator-level section of p^1
    if (given) {
        mbar_mod = given->mbar;
        p1 = SymMap::zero(mbar_mod, n_changed, 1, 0);
        for (int i = 0; i < mbar_mod->n_gens(); ++i)
            if (!given->p1_images[i].is_zero()) p1.values[{i}] = given->p1_images[i];
        section_n = given->section;
    } else {
        std::vector<Gen> gens = M.gens;
        std::vector<int> ncopy(N.n_gens());
        for (int j = 0; j < N.n_gens(); ++j) {
            ncopy[j] = (int)gens.size();
            gens.push_back({"cyl_" + N.gen_name(j), N.gen_degree(j)});
        }
        std::vector<int> hgen(M.n_gens());
        for (int i = 0; i < M.n_gens(); ++i) {
            hgen[i] = (int)gens.size();
            gens.push_back({"h_" + M.gen_name(i), M.gen_degree(i) - 1});
        }
        auto rename_n = [&](const ModElem& x) {
            ModElem out;
            for (auto& [g, c] : x.terms) out.add_term(ncopy[g], c);
            return out;
        };
        auto h_of = [&](const ModElem& x) {
            ModElem out;
            for (auto& [g, c] : x.terms) out.add_term(hgen[g], sign_by_degree(*A, c));
            return out;
        };
        std::vector<ModElem> diff(gens.size());
        for (int i = 0; i < M.n_gens(); ++i) diff[i] = M.diff[i];
        for (int j = 0; j < N.n_gens(); ++j) diff[ncopy[j]] = rename_n(N.diff[j]);
        for (int i = 0; i < M.n_gens(); ++i) {
            ModElem f1m = f.f(1).value({i});
            diff[hgen[i]] = ModElem::gen(i) - rename_n(f1m) - h_of(M.diff[i]);
        }
        mbar_mod = CellModule::make(A, gens, diff, false);
        p1 = SymMap::zero(mbar_mod, n_changed, 1, 0);
        for (int i = 0; i < M.n_gens(); ++i) {
            ModElem v = f.f(1).value({i});
            if (!v.is_zero()) p1.values[{i}] = v;
        }
        for (int j = 0; j < N.n_gens(); ++j) p1.values[{ncopy[j]}] = ModElem::gen(j);
        section_n.resize(N.n_gens());
        for (int j = 0; j < N.n_gens(); ++j) section_n[j] = ModElem::gen(ncopy[j]);
    }

    auto all_old = [&](const std::vector<int>& t) {
        for (int g : t)
            if (g >= n_old) return false;
        return true;
    };

    // anchor rho_bar = Gamma_N o p, via the coalgebra composition of p
    auto mbar = std::make_shared<SHLRStructure>();
    mbar->base = A;
    mbar->module = mbar_mod;
    mbar->W = W;
    mbar->higher_vanish = false;

    // the p-so-far morphism used for blockwise composition (taylor filled below)
    LinearSHMorphism pfull;
    pfull.source = mbar;  // shares the structure being built; only modules used
    pfull.target = T;
    pfull.f0 = id0;
    pfull.target_changed = n_changed;
    pfull.W = W;
    pfull.taylor[1] = p1;
    for (int k = 2; k <= W; ++k) {
        SymMap pk = SymMap::zero(mbar_mod, n_changed, k, 0);
        for (auto& t : symmetric_tuples(M, k)) {
            ModElem v = f.f(k).value(t);
            if (!v.is_zero()) pk.values[t] = v;  // indices < n_old coincide
        }
        pfull.taylor[k] = pk;
    }

    for (int k = 1; k <= W - 1; ++k)
        for (auto& t : symmetric_tuples(*mbar_mod, k)) {
            // rho^k(T) = sum over blocks of rho_N applied to p-blocks
            Derivation rho = Derivation::zero(A, 1 + tuple_degree(*mbar_mod, t));
            // blockwise: reuse the linear-SH machinery with op = rho_N
            // (values are derivations; assemble through a rank-1 trick)
            // direct implementation:
            std::function<void(std::vector<std::vector<int>>&, size_t)> dummy;
            (void)dummy;
            // compositions of t into blocks with multi-unshuffles
            std::vector<Deg> degs;
            for (int g : t) degs.push_back(mbar_mod->gen_degree(g));
            std::vector<int> comp;
            std::function<void(int)> rec = [&](int rem) {
                if (rem == 0) {
                    for (auto& sig : multi_unshuffles(comp)) {
                        int eps = koszul_sign(degs, sig);
                        int r = (int)comp.size();
                        std::vector<ModElem> beval;
                        int pos = 0;
                        bool dead = false;
                        for (int kk : comp) {
                            std::vector<ModElem> args;
                            for (int i = 0; i < kk; ++i)
                                args.push_back(ModElem::gen(t[sig(pos + i + 1) - 1]));
                            pos += kk;
                            ModElem fb = pfull.f(kk).eval(args);
                            if (fb.is_zero()) {
                                dead = true;
                                break;
                            }
                            beval.push_back(fb);
                        }
                        if (dead) continue;
                        std::vector<std::pair<Elem, int>> choice(r);
                        std::function<void(int, Rat)> pick = [&](int b, Rat qacc) {
                            if (b == r) {
                                int sgn = 1;
                                Deg nprefix = 0;
                                Elem aprod = Elem::one();
                                for (int i = 0; i < r; ++i) {
                                    Deg ad = A->degree_of(choice[i].first);
                                    if (is_odd(ad) && is_odd(1 + nprefix)) sgn = -sgn;
                                    aprod = A->mul(aprod, choice[i].first);
                                    nprefix += N.gen_degree(choice[i].second);
                                }
                                if (aprod.is_zero()) return;
                                std::vector<int> ntuple;
                                for (auto& [a, g] : choice) ntuple.push_back(g);
                                std::vector<Deg> nd;
                                for (int g : ntuple) nd.push_back(N.gen_degree(g));
                                int s2 = koszul_sort_sign(ntuple, nd);
                                for (size_t u = 0; u + 1 < ntuple.size(); ++u)
                                    if (ntuple[u] == ntuple[u + 1] &&
                                        is_odd(N.gen_degree(ntuple[u])))
                                        return;
                                Derivation rn = T->rho_value((int)ntuple.size() + 1, ntuple);
                                Rat fact = 1;
                                for (int i = 2; i <= r; ++i) fact *= i;
                                Derivation scaled =
                                    der_scale(A, (qacc * Rat(eps * sgn * s2) / fact) * aprod, rn);
                                for (int i = 0; i < A->n_gens(); ++i)
                                    rho.images[i] += scaled.images[i];
                                return;
                            }
                            for (auto& [g, c] : beval[b].terms)
                                for (auto& [mono, q] : c.terms) {
                                    choice[b] = {Elem{{{mono, Rat(1)}}}, g};
                                    pick(b + 1, qacc * q);
                                }
                        };
                        pick(0, Rat(1));
                    }
                    return;
                }
                for (int kk = 1; kk <= rem; ++kk) {
                    comp.push_back(kk);
                    rec(rem - kk);
                    comp.pop_back();
                }
            };
            rec(k);
            if (!rho.is_zero()) mbar->set_rho(k + 1, t, rho);
        }

    // weights 2..W: provisional values + Hom-complex corrections
    for (int k = 2; k <= W; ++k) {
        // provisional values on bare tuples
        for (auto& t : symmetric_tuples(*mbar_mod, k)) {
            if (all_old(t)) {
                ModElem v = S->D_value(k, t);
                if (!v.is_zero()) mbar->set_D(k, t, v);
                continue;
            }
            // mbar choice: p^1(mbar) equals the condition-(2) right-hand side
            // (rho-term plus blockwise D-term) minus the lower-weight D's
            std::vector<ModElem> args;
            for (int g : t) args.push_back(ModElem::gen(g));
            ModElem rhs = detail::blockwise_apply(pfull, t, 1, [&](const std::vector<int>& nt) {
                std::vector<ModElem> as;
                for (int g : nt) as.push_back(ModElem::gen(g));
                return T->eval_D(as);
            });
            std::vector<Deg> degs;
            for (int g : t) degs.push_back(mbar_mod->gen_degree(g));
            for (int kk = 0; kk <= k - 1; ++kk)
                for (auto& sig : unshuffles(kk, k - kk)) {
                    int eps = koszul_sign(degs, sig);
                    std::vector<ModElem> block;
                    for (int i = 1; i <= kk; ++i) block.push_back(ModElem::gen(t[sig(i) - 1]));
                    std::vector<ModElem> rest;
                    for (int i = kk + 1; i <= k; ++i)
                        rest.push_back(ModElem::gen(t[sig(i) - 1]));
                    ModElem fr = pfull.f(k - kk).eval(rest);
                    if (fr.is_zero()) continue;
                    Derivation rho = mbar->eval_rho(block);
                    ModElem term;
                    for (auto& [g, c] : fr.terms) term.add_term(g, rho.apply(c));
                    rhs += Rat(eps) * term;
                }
            for (int kk = 1; kk < k; ++kk)
                for (auto& sig : unshuffles(kk, k - kk)) {
                    int eps = koszul_sign(degs, sig);
                    std::vector<ModElem> block;
                    for (int i = 1; i <= kk; ++i) block.push_back(ModElem::gen(t[sig(i) - 1]));
                    ModElem dk = mbar->eval_D(block);
                    if (dk.is_zero()) continue;
                    std::vector<ModElem> outer{dk};
                    for (int i = kk + 1; i <= k; ++i)
                        outer.push_back(ModElem::gen(t[sig(i) - 1]));
                    rhs -= Rat(eps) * pfull.f(k - kk + 1).eval(outer);
                }
            // preimage under p^1 through the generator-level section
            ModElem mb;
            for (auto& [g, c] : rhs.terms) mb += mbar_mod->scale(c, section_n[g]);
            if (!mb.is_zero()) mbar->set_D(k, t, mb);
        }
        // correction: solve [Delta, D1] = -eta with Delta vanishing on old
        // tuples and p^1 o Delta = 0; the correction has map degree 1, the
        // defect degree 2, so widen the degree range of the Hom window
        Window hw(std::min(w.degree_min, 0), std::max(w.degree_max, 2) + 1, w.poly_degree_max);
        auto V = hom_complex(mbar_mod, mbar_mod, hw, k);
        SymMap eta = SymMap::zero(mbar_mod, mbar_mod, k, 2);
        for (auto& t : symmetric_tuples(*mbar_mod, k)) eta.set_value(t, mbar->linf_defect(t));
        if (eta.is_zero()) continue;
        auto target = hom_coords_or_throw(V, Rat(-1) * eta, 2,
                                          "correction at weight " + std::to_string(k));
        // constraints
        std::vector<SparseRow> cons;
        auto kit = V.keys.find(1);
        if (kit != V.keys.end()) {
            auto& keys = kit->second;
            // old-tuple coordinates vanish
            for (int j = 0; j < (int)keys.size(); ++j)
                if (all_old(keys[j].tuple)) {
                    SparseRow row;
                    row[j] = 1;
                    cons.push_back(row);
                }
            // p1-composition vanishes: group by output coordinates; keys
            // whose p-image escapes the window are pinned to zero
            std::map<std::string, SparseRow> prow;
            for (int j = 0; j < (int)keys.size(); ++j) {
                try {
                    ModElem img = p1.eval({ModElem::gen(keys[j].target)});
                    img = n_changed->scale(Elem{{{keys[j].mono, Rat(1)}}}, img);
                    for (auto& [g, c] : img.terms)
                        for (auto& [mm, q] : c.terms) {
                            std::string key;
                            for (int gg : keys[j].tuple) key += std::to_string(gg) + ",";
                            key += "|" + A->mono_str(mm) + "|" + std::to_string(g);
                            prow[key][j] += q;
                        }
                } catch (const window_error&) {
                    SparseRow pin;
                    pin[j] = 1;
                    cons.push_back(pin);
                }
            }
            for (auto& [kk, row] : prow) cons.push_back(row);
        }
        auto sol = V.C.solve_boundary(2, target, cons, false);
        if (!sol) throw window_error("window too small for correction at weight " +
                                     std::to_string(k));
        SymMap delta = V.map_of(1, *sol);
        for (auto& [t, v] : delta.values) {
            ModElem cur = mbar->D_value(k, t);
            ModElem nv = cur + v;
            if (nv.is_zero())
                mbar->Dtab[k].erase(t);
            else
                mbar->Dtab[k][t] = nv;
        }
    }

    // assemble the returned morphisms
    LinearSHMorphism inc;
    inc.source = S;
    inc.target = mbar;
    inc.f0 = id0;
    inc.target_changed = base_change(id0, mbar_mod);
    inc.W = W;
    SymMap i1 = SymMap::zero(S->module, inc.target_changed, 1, 0);
    for (int i = 0; i < M.n_gens(); ++i) i1.values[{i}] = ModElem::gen(i);
    inc.taylor[1] = i1;

    Factorization out;
    out.mbar = mbar;
    out.include = inc;
    out.project = pfull;
    return out;
}

/// Lemma 19: lifting over a fixed base. One affine solve per weight with the
/// Hom-complex differential as the linear part, subject to phi o l = psi and
/// l o f = g.
inline LinearSHMorphism lift_fixed_base(const LinearSHMorphism& f, const LinearSHMorphism& phi,
                                        const LinearSHMorphism& g, const LinearSHMorphism& psi,
                                        bool f_is_acyclic, const Window& w) {
    if (!f.strict() || !phi.strict())
        throw argument_error("lift_fixed_base: f and phi must be strict");
    const SHPtr& Ms = f.source;
    const SHPtr& Ns = f.target;
    const SHPtr& Ls = phi.source;
    const SHPtr& Ks = phi.target;
    if (g.source != Ms || g.target != Ls || psi.source != Ns || psi.target != Ks)
        throw argument_error("lift_fixed_base: square shape mismatch");
    const AlgPtr& A = Ms->base;
    AlgMorphism id0 = AlgMorphism::identity(A);
    int W = std::min(std::min(g.W, psi.W), std::min(Ls->W, Ns->W));

    // acyclicity certificate for the flagged map
    {
        const LinearSHMorphism& flagged = f_is_acyclic ? f : phi;
        ModMorphism m1{flagged.source->module, flagged.target_changed, {}, 0};
        for (int i = 0; i < flagged.source->module->n_gens(); ++i)
            m1.images.push_back(flagged.f(1).value({i}));
        if (!window_qiso(m1, w))
            throw precondition_error("lift_fixed_base: flagged map is not a window equivalence");
    }

    // f strict cell inclusion: source generators map to distinct target gens
    std::vector<int> f_img(Ms->module->n_gens(), -1);
    for (int i = 0; i < Ms->module->n_gens(); ++i) {
        ModElem v = f.f(1).value({i});
        if (v.terms.size() != 1 || !(v.terms.begin()->second == Elem::one()))
            throw argument_error("lift_fixed_base: f is not a generator-level cell inclusion");
        f_img[i] = v.terms.begin()->first;
    }

    LinearSHMorphism l;
    l.source = Ns;
    l.target = Ls;
    l.f0 = id0;
    l.target_changed = base_change(id0, Ls->module);
    l.W = W;

    for (int n = 1; n <= W; ++n) {
        Window hw(std::min(w.degree_min, -1), std::max(w.degree_max, 1) + 1, w.poly_degree_max);
        auto V = hom_complex(Ns->module, Ls->module, hw, n);
        int dim0 = V.C.dim(0);
        // affine system: hom_diff(v) = C_n, phi o v = psi_n - phi o (0), v(old) = g_n
        SymMap zero_n = SymMap::zero(Ns->module, l.target_changed, n, 0);
        l.taylor[n] = zero_n;
        // constant part C_n: the condition-(2) defect with l^n = 0 equals
        // -hom_diff(l^n) + C_n, so C_n = defect(l^n = 0)
        SymMap Cn = SymMap::zero(Ns->module, l.target_changed, n, 1);
        for (auto& t : symmetric_tuples(*Ns->module, n)) Cn.set_value(t, linear_sh_defect(l, t));
        std::vector<Rat> rhs = hom_coords_or_throw(V, Cn, 1, "lift at weight " + std::to_string(n));
        const SparseMat& D = V.C.d_of(0);
        int extra = 0;
        std::vector<SparseRow> rows;
        std::vector<Rat> brow;
        for (int i = 0; i < D.rows; ++i) {
            rows.push_back(D.row[i]);
            brow.push_back(rhs[i]);
        }
        auto kit = V.keys.find(0);
        std::vector<HomComplexView::Key> keys =
            kit == V.keys.end() ? std::vector<HomComplexView::Key>() : kit->second;
        // (e3): values on all-old tuples match g^n (after renaming through f)
        std::map<std::vector<int>, std::map<std::pair<Monomial, int>, int>> coord_of;
        for (int j = 0; j < (int)keys.size(); ++j)
            coord_of[keys[j].tuple][{keys[j].mono, keys[j].target}] = j;
        for (auto& t : symmetric_tuples(*Ms->module, n)) {
            std::vector<int> ft;
            for (int gg : t) ft.push_back(f_img[gg]);
            std::sort(ft.begin(), ft.end());
            ModElem want = g.f(n).value(t);
            auto cit = coord_of.find(ft);
            if (cit == coord_of.end()) {
                if (!want.is_zero())
                    throw window_error("lift: prescribed value outside the window");
                continue;
            }
            std::map<std::pair<Monomial, int>, Rat> wanted;
            for (auto& [gg, c] : want.terms)
                for (auto& [mm, q] : c.terms) wanted[{mm, gg}] = q;
            for (auto& [key, j] : cit->second) {
                SparseRow row;
                row[j] = 1;
                rows.push_back(row);
                auto it = wanted.find(key);
                brow.push_back(it == wanted.end() ? Rat(0) : it->second);
                wanted.erase(key);
                ++extra;
            }
            for (auto& [key, q] : wanted)
                if (q != 0) throw window_error("lift: prescribed value outside the window");
        }
        // (e2): phi^1 o l^n = psi^n
        std::vector<int> phi_img(Ls->module->n_gens(), -1);
        for (int i = 0; i < Ls->module->n_gens(); ++i) {
            ModElem v = phi.f(1).value({i});
            if (v.is_zero()) continue;
            phi_img[i] = v.terms.begin()->first;
        }
        {
            std::map<std::string, std::pair<SparseRow, Rat>> prow;
            for (int j = 0; j < (int)keys.size(); ++j) {
                int lt = keys[j].target;
                if (phi_img[lt] < 0) continue;
                std::string key;
                for (int gg : keys[j].tuple) key += std::to_string(gg) + ",";
                key += "|" + A->mono_str(keys[j].mono) + "|" + std::to_string(phi_img[lt]);
                prow[key].first[j] += 1;
            }
            // right-hand side: psi^n coordinates
            for (auto& t : symmetric_tuples(*Ns->module, n)) {
                ModElem want = psi.f(n).value(t);
                for (auto& [gg, c] : want.terms)
                    for (auto& [mm, q] : c.terms) {
                        std::string key;
                        for (int g2 : t) key += std::to_string(g2) + ",";
                        key += "|" + A->mono_str(mm) + "|" + std::to_string(gg);
                        prow[key].second += q;
                    }
            }
            for (auto& [kk, rw] : prow) {
                rows.push_back(rw.first);
                brow.push_back(rw.second);
            }
        }
        SparseMat Afull((int)rows.size(), dim0);
        for (int i = 0; i < (int)rows.size(); ++i)
            for (auto& [j, q] : rows[i]) Afull.set(i, j, q);
        auto sol = solve_system(Afull, brow);
        if (!sol) throw window_error("window too small for lift at weight " + std::to_string(n));
        l.taylor[n] = V.map_of(0, *sol);
        (void)extra;
    }
    return l;
}

/// Lemma 20: replace the base of an SH LR[1] structure along a window
/// quasi-isomorphism r_A : QA -> A, with QM a cell complex over QA whose base
/// change is M. Anchors are lifted through Der(QA) ->> Der(QA, A); brackets
/// get provisional coefficient lifts plus acyclic-fiber corrections.
struct BaseReplacement {
    SHPtr structure;               // (QA, QM)
    LinearSHMorphism fibration;    // (r_A, id) : (A, M) -> (QA, QM)
};

inline BaseReplacement replace_base(const AlgMorphism& rA, const SHPtr& S, const ModPtr& QM,
                                    const Window& w) {
    const AlgPtr& QA = rA.source;
    const AlgPtr& A = rA.target;
    if (S->base != A) throw argument_error("replace_base: structure not over the target of r_A");
    if (QM->base != QA) throw argument_error("replace_base: QM not over QA");
    // base_change(rA, QM) must reproduce M
    {
        auto MB = base_change(rA, QM);
        const CellModule& M = *S->module;
        if (MB->n_gens() != M.n_gens())
            throw argument_error("replace_base: QM does not base-change to M");
        for (int i = 0; i < M.n_gens(); ++i) {
            if (MB->gen_name(i) != M.gen_name(i) || MB->gen_degree(i) != M.gen_degree(i))
                throw argument_error("replace_base: QM generators do not match M");
            ModElem diffA;
            for (auto& [g, c] : MB->diff[i].terms) diffA.add_term(g, c);
            if (!(diffA == M.diff[i]))
                throw argument_error("replace_base: base-changed differential differs from M");
        }
    }
    if (!algebra_qiso(rA, w))
        throw precondition_error("replace_base: r_A is not a window quasi-isomorphism");

    int W = S->W;
    auto out = std::make_shared<SHLRStructure>();
    out->base = QA;
    out->module = QM;
    out->W = W;
    out->higher_vanish = false;

    // lift an A-coefficient through r_A (earliest pivot, window-bounded)
    auto monosQ = window_monomials(*QA, w.poly_degree_max);
    auto lift_coeff = [&](const Elem& c) -> Elem {
        if (c.is_zero()) return Elem();
        Deg d = A->degree_of(c);
        std::vector<Monomial> cand;
        for (auto& m : monosQ)
            if (QA->mono_degree(m) == d) cand.push_back(m);
        // coordinates of r_A(candidate) in the A window basis
        std::map<Monomial, int> col;
        std::vector<Monomial> rows;
        auto coord = [&](const Elem& e, bool grow) {
            std::vector<std::pair<int, Rat>> out2;
            for (auto& [m, q] : e.terms) {
                auto it = col.find(m);
                if (it == col.end()) {
                    if (!grow) throw window_error("replace_base: coefficient escapes the window");
                    col[m] = (int)rows.size();
                    rows.push_back(m);
                    it = col.find(m);
                }
                out2.push_back({it->second, q});
            }
            return out2;
        };
        std::vector<std::vector<std::pair<int, Rat>>> cols;
        for (auto& m : cand) cols.push_back(coord(rA.apply(Elem{{{m, Rat(1)}}}), true));
        auto tgt = coord(c, true);
        SparseMat Amat((int)rows.size(), (int)cand.size());
        for (int j = 0; j < (int)cand.size(); ++j)
            for (auto& [i, q] : cols[j]) Amat.set(i, j, q);
        std::vector<Rat> b(rows.size(), Rat(0));
        for (auto& [i, q] : tgt) b[i] = q;
        auto sol = solve_system(Amat, b);
        if (!sol) throw window_error("replace_base: enlarge window (coefficient lift)");
        Elem out3;
        for (int j = 0; j < (int)cand.size(); ++j)
            if ((*sol)[j] != 0) out3 += (*sol)[j] * Elem{{{cand[j], Rat(1)}}};
        return out3;
    };
    auto lift_modelem = [&](const ModElem& m) {
        ModElem out2;
        for (auto& [g, c] : m.terms) out2.add_term(g, lift_coeff(c));
        return out2;
    };

    // anchors: provisional coefficient lift + kernel correction, tuple by
    // tuple in an order compatible with the coderivation
    auto tuple_order = [&](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> ra(a.rbegin(), a.rend()), rb(b.rbegin(), b.rend());
        return ra < rb;
    };
    for (int k = 1; k <= W - 1; ++k) {
        auto tuples = symmetric_tuples(*QM, k);
        std::sort(tuples.begin(), tuples.end(), tuple_order);
        for (auto& t : tuples) {
            Derivation base = S->rho_value(k + 1, t);
            Deg udeg = base.degree;
            Derivation u0 = Derivation::zero(QA, udeg);
            for (int i = 0; i < QA->n_gens(); ++i) {
                // target along rA: rho_A(T)(rA(q_i))
                Elem tgt = base.apply(rA.apply(QA->gen_elem(i)));
                u0.images[i] = lift_coeff(tgt);
            }
            // chain condition: d_Der(u) = -rho(d_Sym T)
            Derivation lam = Derivation::zero(QA, udeg + 1);
            {
                Deg prefix = 0;
                for (size_t i = 0; i < t.size(); ++i) {
                    ModElem di = QM->diff[t[i]];
                    if (!di.is_zero()) {
                        std::vector<ModElem> args;
                        for (size_t j = 0; j < t.size(); ++j)
                            args.push_back(j == i ? di : ModElem::gen(t[j]));
                        int sg = is_odd(prefix) ? -1 : 1;
                        Derivation r = out->eval_rho(args);
                        for (int q = 0; q < QA->n_gens(); ++q)
                            lam.images[q] += Rat(sg) * r.images[q];
                    }
                    prefix += QM->gen_degree(t[i]);
                }
            }
            Derivation resid = der_differential(u0);
            for (int q = 0; q < QA->n_gens(); ++q) resid.images[q] += lam.images[q];
            if (!resid.is_zero()) {
                // solve d_Der(delta) = -resid with r_A o delta = 0
                std::vector<std::pair<int, Monomial>> unk;
                for (int i = 0; i < QA->n_gens(); ++i)
                    for (auto& m : monosQ)
                        if (QA->mono_degree(m) == udeg + QA->gen_degree(i)) unk.push_back({i, m});
                std::map<std::string, int> rowids;
                std::vector<SparseRow> rows;
                std::vector<Rat> rhs;
                auto row_of = [&](const std::string& key) {
                    auto it = rowids.find(key);
                    if (it != rowids.end()) return it->second;
                    rowids[key] = (int)rows.size();
                    rows.push_back(SparseRow());
                    rhs.push_back(Rat(0));
                    return (int)rows.size() - 1;
                };
                for (int j = 0; j < (int)unk.size(); ++j) {
                    Derivation dj = Derivation::zero(QA, udeg);
                    dj.images[unk[j].first] = Elem{{{unk[j].second, Rat(1)}}};
                    Derivation ddj = der_differential(dj);
                    for (int q = 0; q < QA->n_gens(); ++q)
                        for (auto& [mm, qq] : ddj.images[q].terms)
                            rows[row_of("d:" + std::to_string(q) + ":" + QA->mono_str(mm))][j] +=
                                qq;
                    Elem im = rA.apply(dj.images[unk[j].first]);
                    for (auto& [mm, qq] : im.terms)
                        rows[row_of("r:" + std::to_string(unk[j].first) + ":" + A->mono_str(mm))]
                            [j] += qq;
                }
                for (int q = 0; q < QA->n_gens(); ++q)
                    for (auto& [mm, qq] : resid.images[q].terms) {
                        int r = row_of("d:" + std::to_string(q) + ":" + QA->mono_str(mm));
                        rhs[r] = -qq;
                    }
                SparseMat Amat((int)rows.size(), (int)unk.size());
                for (int i = 0; i < (int)rows.size(); ++i)
                    for (auto& [j, q] : rows[i]) Amat.set(i, j, q);
                auto sol = solve_system(Amat, rhs);
                if (!sol) throw window_error("replace_base: window too small (anchor lift)");
                for (int j = 0; j < (int)unk.size(); ++j)
                    if ((*sol)[j] != 0)
                        u0.images[unk[j].first] += (*sol)[j] * Elem{{{unk[j].second, Rat(1)}}};
            }
            if (!u0.is_zero()) out->set_rho(k + 1, t, u0);
        }
    }

    // brackets: provisional lift + correction per weight
    for (int k = 2; k <= W; ++k) {
        for (auto& t : symmetric_tuples(*QM, k)) {
            std::vector<ModElem> args;
            for (int g : t) args.push_back(ModElem::gen(g));
            ModElem dm = S->eval_D(args);
            ModElem mb = lift_modelem(dm);
            if (!mb.is_zero()) out->set_D(k, t, mb);
        }
        Window hw(std::min(w.degree_min, 0), std::max(w.degree_max, 2) + 1, w.poly_degree_max);
        auto V = hom_complex(QM, QM, hw, k);
        SymMap eta = SymMap::zero(QM, QM, k, 2);
        for (auto& t : symmetric_tuples(*QM, k)) eta.set_value(t, out->linf_defect(t));
        if (eta.is_zero()) continue;
        auto target = hom_coords_or_throw(V, Rat(-1) * eta, 2, "replace_base correction");
        std::vector<SparseRow> cons;
        auto kit = V.keys.find(1);
        if (kit != V.keys.end()) {
            auto& keys = kit->second;
            std::map<std::string, SparseRow> prow;
            for (int j = 0; j < (int)keys.size(); ++j) {
                try {
                    Elem im = rA.apply(Elem{{{keys[j].mono, Rat(1)}}});
                    for (auto& [mm, q] : im.terms) {
                        std::string key;
                        for (int gg : keys[j].tuple) key += std::to_string(gg) + ",";
                        key += "|" + A->mono_str(mm) + "|" + std::to_string(keys[j].target);
                        prow[key][j] += q;
                    }
                } catch (const window_error&) {
                    SparseRow pin;
                    pin[j] = 1;
                    cons.push_back(pin);
                }
            }
            for (auto& [kk, row] : prow) cons.push_back(row);
        }
        auto sol = V.C.solve_boundary(2, target, cons, false);
        if (!sol) throw window_error("replace_base: window too small");
        SymMap delta = V.map_of(1, *sol);
        for (auto& [t, v] : delta.values) {
            ModElem nv = out->D_value(k, t) + v;
            if (nv.is_zero())
                out->Dtab[k].erase(t);
            else
                out->Dtab[k][t] = nv;
        }
    }

    // the strict fibration (r_A, id)
    LinearSHMorphism fib;
    fib.source = S;
    fib.target = out;
    fib.f0 = rA;
    fib.target_changed = base_change(rA, QM);
    fib.W = W;
    SymMap f1 = SymMap::zero(S->module, fib.target_changed, 1, 0);
    for (int i = 0; i < S->module->n_gens(); ++i) f1.values[{i}] = ModElem::gen(i);
    fib.taylor[1] = f1;

    return BaseReplacement{out, fib};
}

/// Lemma 21: general lifting, dually, one affine probe-solve per weight.
inline GeneralSHMorphism lift_general(const GeneralSHMorphism& f, const GeneralSHMorphism& phi,
                                      const GeneralSHMorphism& g, const GeneralSHMorphism& psi,
                                      bool f_is_acyclic, const Window& w) {
    // shapes: f : (B,M) -> (C,N) cofibration; phi : (A,L) -> (D,K) fibration
    const SHPtr& BM = f.source;
    const SHPtr& CN = f.target;
    const SHPtr& AL = phi.source;
    const SHPtr& DK = phi.target;
    if (g.source != BM || g.target != AL || psi.source != CN || psi.target != DK)
        throw argument_error("lift_general: square shape mismatch");
    int W = std::min(std::min(g.W, psi.W), std::min(f.W, phi.W));

    // acyclicity certificate of the flagged map
    {
        const GeneralSHMorphism& fl = f_is_acyclic ? f : phi;
        Report rep = check_general_sh(fl, w, true);
        bool ok = true;
        for (auto& it : rep.items)
            if (it.check.rfind("verdict.", 0) == 0 && it.verdict == Verdict::Fail) ok = false;
        if (!ok)
            throw precondition_error("lift_general: flagged map is not a window equivalence");
    }

    // phi pins: D-generators map to distinct A-generators; K-duals to L-duals
    std::vector<int> pin_agen(AL->base->n_gens(), -1);   // A-gen -> D-gen
    for (int y = 0; y < DK->base->n_gens(); ++y) {
        const Elem& im = phi.images[y];
        if (im.terms.size() != 1) throw argument_error("lift_general: phi0 is not a cell inclusion");
        auto& [m, c] = *im.terms.begin();
        if (m.factors.size() != 1 || m.factors[0].second != 1 || !(c == 1))
            throw argument_error("lift_general: phi0 is not a cell inclusion");
        pin_agen[m.factors[0].first] = y;
    }
    std::vector<int> pin_ldual(AL->module->n_gens(), -1);  // L-gen -> K-gen
    for (int v = 0; v < DK->module->n_gens(); ++v) {
        const Elem& im = phi.images[phi.tgt_ce->dual_gen(v)];
        if (im.is_zero()) continue;
        auto& [m, c] = *im.terms.begin();
        if (im.terms.size() != 1 || m.factors.size() != 1 || m.factors[0].second != 1)
            throw argument_error("lift_general: phi1 is not a generator projection");
        pin_ldual[m.factors[0].first - phi.src_ce->n_agens] = v;
    }

    GeneralSHMorphism l;
    l.source = CN;
    l.target = AL;
    l.src_ce = psi.src_ce;  // CE(C,N)
    l.tgt_ce = g.tgt_ce;    // CE(A,L)
    l.W = W;
    l.images.assign(l.tgt_ce->ce->n_gens(), Elem());
    // pinned images from psi
    for (int y = 0; y < AL->base->n_gens(); ++y)
        if (pin_agen[y] >= 0) l.images[y] = psi.images[pin_agen[y]];
    for (int v = 0; v < AL->module->n_gens(); ++v)
        if (pin_ldual[v] >= 0)
            l.images[l.tgt_ce->dual_gen(v)] = psi.images[psi.tgt_ce->dual_gen(pin_ldual[v])];

    const TruncatedCE& SC = *l.src_ce;
    const TruncatedCE& TC = *l.tgt_ce;
    auto monosC = window_monomials(*SC.ce, w.poly_degree_max);

    for (int n = 0; n <= W; ++n) {
        // unknown slots: weight-(w_gamma + n) monomials of matching degree
        struct Slot {
            int gen;
            Monomial mono;
        };
        std::vector<Slot> slots;
        auto add_slots = [&](int gen, int weight, Deg deg) {
            for (auto& m : monosC)
                if (SC.mono_weight(m) == weight && SC.ce->mono_degree(m) == deg)
                    slots.push_back({gen, m});
        };
        for (int y = 0; y < AL->base->n_gens(); ++y)
            if (pin_agen[y] < 0) add_slots(y, n, AL->base->gen_degree(y));
        for (int v = 0; v < AL->module->n_gens(); ++v)
            if (pin_ldual[v] < 0)
                add_slots(TC.dual_gen(v), n + 1, TC.ce->gen_degree(TC.dual_gen(v)));
        auto install = [&](const std::vector<Rat>& vals) {
            for (size_t j = 0; j < slots.size(); ++j)
                if (vals[j] != 0)
                    l.images[slots[j].gen] += vals[j] * Elem{{{slots[j].mono, Rat(1)}}};
        };
        // defect components: chain map and f* o l* = g*, all generators
        auto defect = [&]() {
            std::vector<std::pair<std::string, Rat>> coords;
            auto push = [&](const std::string& tag, const Elem& e) {
                for (auto& [m, c] : e.terms) coords.push_back({tag + "|" + SC.ce->mono_str(m), c});
            };
            for (int gg = 0; gg < TC.ce->n_gens(); ++gg) {
                int wg = TC.is_dual(gg) ? 1 : 0;
                Elem chain = l.apply(TC.apply_Q(TC.ce->gen_elem(gg), W), W) -
                             SC.apply_Q(l.images[gg], W);
                push("c" + std::to_string(gg), SC.weight_part(chain, wg + n));
                // (lg): f o l = g, matching component
                Elem lg = f.apply(l.images[gg], W) - g.images[gg];
                // lg lives in CE(B,M); tag separately
                Elem comp = f.src_ce->weight_part(lg, wg + n);
                for (auto& [m, c] : comp.terms)
                    coords.push_back(
                        {"g" + std::to_string(gg) + "|" + f.src_ce->ce->mono_str(m), c});
            }
            return coords;
        };
        // affine probing
        auto at_zero = defect();
        std::map<std::string, int> rowid;
        auto row_of = [&](const std::string& k) {
            auto it = rowid.find(k);
            if (it != rowid.end()) return it->second;
            int id = (int)rowid.size();
            rowid[k] = id;
            return id;
        };
        std::vector<std::map<int, Rat>> cols(slots.size());
        std::vector<Rat> base_vec;
        for (auto& [k, c] : at_zero) {
            int r = row_of(k);
            if ((int)base_vec.size() <= r) base_vec.resize(r + 1, Rat(0));
            base_vec[r] += c;
        }
        for (size_t j = 0; j < slots.size(); ++j) {
            Elem save = l.images[slots[j].gen];
            l.images[slots[j].gen] += Elem{{{slots[j].mono, Rat(1)}}};
            auto probe = defect();
            l.images[slots[j].gen] = save;
            std::map<int, Rat> col;
            for (auto& [k, c] : probe) {
                int r = row_of(k);
                if ((int)base_vec.size() <= r) base_vec.resize(r + 1, Rat(0));
                col[r] += c;
            }
            for (auto& [r, c] : col) {
                Rat b = (r < (int)base_vec.size()) ? base_vec[r] : Rat(0);
                Rat d = c - b;
                if (d != 0) cols[j][r] = d;
            }
        }
        int nrows = (int)rowid.size();
        base_vec.resize(nrows, Rat(0));
        SparseMat Amat(nrows, (int)slots.size());
        for (size_t j = 0; j < slots.size(); ++j)
            for (auto& [r, c] : cols[j]) Amat.set(r, (int)j, c);
        std::vector<Rat> rhs(nrows);
        for (int r = 0; r < nrows; ++r) rhs[r] = -base_vec[r];
        auto sol = solve_system(Amat, rhs);
        if (!sol) throw window_error("lift_general: window too small at weight " +
                                     std::to_string(n));
        install(*sol);
    }
    return l;
}

}  // namespace shlr
