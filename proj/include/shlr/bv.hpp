#pragma once

#include "shlr/lifting.hpp"

namespace shlr {

/// Algebraic presentation of the BV input: ambient polynomial fields, the
/// critical-surface ideal, and the gauge distribution.
struct Presentation {
    AlgPtr ambient;                        // k[x_1..x_n], all degree 0
    std::vector<Elem> ideal;               // surface equations
    std::vector<Derivation> distribution;  // vector fields tangent to the surface
};

struct KoszulTateResult {
    AlgPtr QA;
    AlgPtr Aq;             // quotient oracle
    AlgMorphism proj;      // p_KT : QA -> Aq
    std::map<Deg, std::vector<std::string>> stage_gens;  // degree -> adjoined names
    Report certificate;
};

/// The algebra as a rank-one cell module over itself (for window complexes).
inline ModuleComplex algebra_complex(const AlgPtr& A, const Window& w) {
    auto unit = CellModule::make(A, {{"I", 0}}, {});
    return truncate(unit, w);
}

/// Tate's iterative adjunction: antifields kill the ideal, then stagewise
/// generators kill the lowest surviving negative cohomology in the window.
inline KoszulTateResult koszul_tate(const Presentation& P, Deg depth, const Window& w,
                                    AlgPtr oracle = nullptr) {
    if (depth > 0) throw argument_error("koszul_tate: depth must be <= 0");
    KoszulTateResult out;
    out.Aq = oracle ? oracle : quotient_window(P.ambient, P.ideal, w.poly_degree_max);

    std::vector<Gen> gens = P.ambient->gens;
    std::map<std::string, Elem> diff;
    for (size_t a = 0; a < P.ideal.size(); ++a) {
        std::string nm = "af" + std::to_string(a + 1);
        gens.push_back({nm, -1});
        diff[nm] = P.ideal[a];  // indices of ambient generators stay valid
        out.stage_gens[-1].push_back(nm);
    }
    AlgPtr QA = Algebra::make(gens, diff);

    int stage = 2;
    while (true) {
        auto V = algebra_complex(QA, w);
        auto H = V.C.cohomology();
        // certified cycles from the good columns may be adjoined even at
        // degrees flagged unreliable; spurious killers stay harmless and the
        // final cone certificate arbitrates
        Deg lowest = 1;
        for (auto& [d, n] : H.dim)
            if (d < 0 && n > 0 && d > w.degree_min) {
                lowest = d;
                break;
            }
        if (lowest >= 0 || lowest - 1 < depth) break;
        auto reps = H.reps[lowest];
        std::vector<Gen> g2 = QA->gens;
        std::map<std::string, Elem> d2;
        for (int i = 0; i < QA->n_gens(); ++i)
            if (!QA->diff[i].is_zero()) d2[QA->gen_name(i)] = QA->diff[i];
        int r = 0;
        for (auto& rep : reps) {
            ModElem z = V.element(lowest, rep);
            Elem cycle;
            for (auto& [g, c] : z.terms) cycle += c;  // unit module: coefficient is the element
            std::string nm = "agh" + std::to_string(stage) + "_" + std::to_string(++r);
            g2.push_back({nm, lowest - 1});
            d2[nm] = cycle;
            out.stage_gens[lowest - 1].push_back(nm);
        }
        QA = Algebra::make(g2, d2);
        ++stage;
        if (stage > 32) throw window_error("koszul_tate: stage limit exceeded");
    }
    out.QA = QA;

    AlgMorphism proj{QA, out.Aq, {}};
    for (int i = 0; i < QA->n_gens(); ++i) {
        if (out.Aq->has_gen(QA->gen_name(i)))
            proj.images.push_back(out.Aq->gen_elem(QA->gen_name(i)));
        else
            proj.images.push_back(Elem());
    }
    out.proj = proj;

    Report& cert = out.certificate;
    cert.merge(check_square_zero(*QA), "QA");
    cert.merge(proj.check_chain_map(), "pKT");
    // H^0 matches the quotient window and negative cohomology vanishes
    auto V = algebra_complex(QA, w);
    auto H = V.C.cohomology();
    int nf_count = (int)window_monomials(*out.Aq, w.poly_degree_max).size();
    cert.require(H.dim[0] == nf_count, "H0_matches_quotient",
                 H.dim[0] == nf_count ? ""
                                      : "dim H^0 = " + std::to_string(H.dim[0]) + ", normal forms " +
                                            std::to_string(nf_count));
    for (auto& [d, n] : H.dim)
        if (d < 0 && V.C.reliable(d))
            cert.require(n == 0, "Hneg." + std::to_string(d),
                         n == 0 ? "" : "dim = " + std::to_string(n));
    bool cone_ok = algebra_qiso(proj, w);
    cert.require(cone_ok, "cone_qiso", cone_ok ? "" : "p_KT cone not acyclic in the interior");
    return out;
}

/// Restriction of the distribution to the surface: a dg LR pair over the
/// quotient oracle with the bracket table solved from involutivity.
inline LRPtr restrict_distribution(const Presentation& P, const Window& w,
                                   AlgPtr oracle = nullptr) {
    AlgPtr Aq = oracle ? oracle : quotient_window(P.ambient, P.ideal, w.poly_degree_max);
    int nf = (int)P.distribution.size();
    // tangency
    for (int b = 0; b < nf; ++b)
        for (size_t a = 0; a < P.ideal.size(); ++a) {
            Elem v = Aq->reduce(P.distribution[b].apply(P.ideal[a]));
            if (!v.is_zero())
                throw precondition_error("distribution field " + std::to_string(b + 1) +
                                         " is not tangent: E(F_" + std::to_string(a + 1) +
                                         ") = " + Aq->str(v));
        }
    // restricted fields over the oracle
    std::vector<Derivation> E;
    for (auto& u : P.distribution) {
        Derivation r = Derivation::zero(Aq, u.degree);
        for (int i = 0; i < Aq->n_gens(); ++i) r.images[i] = Aq->reduce(u.images[i]);
        E.push_back(r);
    }
    auto M = CellModule::make(Aq, [&] {
        std::vector<Gen> gs;
        for (int b = 0; b < nf; ++b) gs.push_back({"E" + std::to_string(b + 1), 0});
        return gs;
    }(), {});
    auto pair = std::make_shared<DGLRPair>();
    pair->base = Aq;
    pair->module = M;
    pair->anchor = E;
    // involutivity: [E_b, E_c] = sum c_d E_d in the window
    auto DerAq = der_module(Aq);
    for (int b = 0; b < nf; ++b)
        for (int c = b; c < nf; ++c) {
            if (b == c) continue;  // even generators: [E,E] = 0
            Derivation br = der_bracket(E[b], E[c]);
            std::vector<ModElem> gens_der;
            for (int d = 0; d < nf; ++d) gens_der.push_back(DerAq.from_der(E[d]));
            ModElem target = DerAq.from_der(br);
            if (target.is_zero()) continue;
            auto sol = solve_a_combination(DerAq.module, gens_der, target, w);
            if (!sol)
                throw precondition_error("distribution not involutive: [E" +
                                         std::to_string(b + 1) + ",E" + std::to_string(c + 1) +
                                         "] leaves the span");
            ModElem v;
            for (int d = 0; d < nf; ++d) v.add_term(d, (*sol)[d]);
            if (!v.is_zero()) pair->table[{b, c}] = v;
        }
    return pair;
}

struct GhostResolution {
    SHPtr structure;             // (A, A<v*, ...>)
    LinearSHMorphism q;          // strict quasi-isomorphism onto the pair
    SHPtr target;                // decalage of the input pair
    Report certificate;
};

/// Free window-resolution of the module with transferred SH structure so
/// that q is strict (Lemma 18 with M = 0 and the given decomposition).
inline GhostResolution ghost_resolution(const LRPtr& L, const Window& w, int W) {
    const AlgPtr& A = L->base;
    int nf = L->module->n_gens();
    // window syzygies among the anchors
    auto DerA = der_module(A);
    std::vector<ModElem> anchors_der;
    for (int b = 0; b < nf; ++b) anchors_der.push_back(DerA.from_der(L->anchor[b]));

    GhostResolution out;
    auto T = std::make_shared<SHLRStructure>(decalage(*L));
    out.target = T;

    // collect syzygy generators degree-slice by degree-slice
    std::vector<ModElem> syz;  // elements sum c_b E_b = 0, coefficients in A
    {
        auto monos = window_monomials(*A, w.poly_degree_max);
        // coordinates of c_b * anchor_b over the Der window
        auto DV = truncate(DerA.module, w);
        std::vector<std::pair<int, Monomial>> unk;
        std::vector<std::vector<Rat>> cols;
        for (int b = 0; b < nf; ++b) {
            if (anchors_der[b].is_zero()) {
                // the label itself is a syzygy
                ModElem z;
                z.add_term(b, Elem::one());
                syz.push_back(z);
                continue;
            }
            for (auto& m : monos) {
                try {
                    ModElem scaled = DerA.module->scale(Elem{{{m, Rat(1)}}}, anchors_der[b]);
                    auto c = DV.coords(scaled);
                    if (!c) continue;
                    unk.push_back({b, m});
                    cols.push_back(c->second);
                } catch (const window_error&) {
                    continue;
                }
            }
        }
        if (!unk.empty()) {
            int rows = (int)cols[0].size();
            SparseMat Amat(rows, (int)unk.size());
            for (int j = 0; j < (int)unk.size(); ++j)
                for (int i = 0; i < rows; ++i)
                    if (cols[j][i] != 0) Amat.set(i, j, cols[j][i]);
            for (auto& kv : kernel_basis(Amat)) {
                ModElem z;
                for (int j = 0; j < (int)unk.size(); ++j)
                    if (kv[j] != 0) z.add_term(unk[j].first, kv[j] * Elem{{{unk[j].second, Rat(1)}}});
                // keep only new syzygies (not A-combinations of earlier ones)
                if (!syz.empty()) {
                    auto dep = solve_a_combination(L->module, syz, z, w);
                    if (dep) continue;
                }
                syz.push_back(z);
            }
        }
    }

    if (syz.empty()) {
        // free case: the resolution is the identity
        out.structure = T;
        out.q = LinearSHMorphism::identity(T);
        out.certificate.pass("resolution.identity");
        return out;
    }

    // one ghost stage: adjoin degree -1 generators killing the syzygies
    std::vector<Gen> gens;
    std::vector<ModElem> diff;
    for (int b = 0; b < nf; ++b) {
        gens.push_back({"v" + std::to_string(b + 1) + "s", 0});
        diff.push_back(ModElem());
    }
    for (size_t r = 0; r < syz.size(); ++r) {
        gens.push_back({"w" + std::to_string(r + 1) + "s", -1});
        diff.push_back(syz[r]);
    }
    auto R = CellModule::make(A, gens, diff, false);
    // no second-stage syzygies in the window
    {
        auto H = cohomology(R, w).dim;
        for (auto& [d, n] : H)
            out.certificate.require(d >= -1 || n == 0, "stage2." + std::to_string(d),
                                    n == 0 ? "" : "deeper syzygies present; enlarge the stage");
    }

    // kept basis of the span: greedy independent labels
    std::vector<int> kept;
    std::vector<ModElem> kept_der;
    for (int b = 0; b < nf; ++b) {
        if (anchors_der[b].is_zero()) continue;
        if (!kept_der.empty()) {
            auto dep = solve_a_combination(DerA.module, kept_der, anchors_der[b], w);
            if (dep) continue;
        }
        kept.push_back(b);
        kept_der.push_back(anchors_der[b]);
    }
    // faithful sub-pair on the kept labels
    auto KM = CellModule::make(A, [&] {
        std::vector<Gen> gs;
        for (int b : kept) gs.push_back(L->module->gens[b]);
        return gs;
    }(), {});
    auto KP = std::make_shared<DGLRPair>();
    KP->base = A;
    KP->module = KM;
    for (int b : kept) KP->anchor.push_back(L->anchor[b]);
    // express every label over the kept basis
    std::vector<ModElem> label_over_kept(nf);
    for (int b = 0; b < nf; ++b) {
        if (anchors_der[b].is_zero()) continue;
        auto sol = solve_a_combination(DerA.module, kept_der, anchors_der[b], w);
        if (!sol) throw window_error("ghost_resolution: label escapes the kept span");
        ModElem v;
        for (size_t kk = 0; kk < kept.size(); ++kk) v.add_term((int)kk, (*sol)[kk]);
        label_over_kept[b] = v;
    }
    // brackets on the kept pair from the label table
    for (size_t i = 0; i < kept.size(); ++i)
        for (size_t j = i; j < kept.size(); ++j) {
            if (i == j) continue;
            ModElem br = L->bracket_gens(kept[i], kept[j]);
            ModElem v;
            for (auto& [b, c] : br.terms) v += KM->scale(c, label_over_kept[b]);
            if (!v.is_zero()) KP->table[{(int)i, (int)j}] = v;
        }
    auto KT = std::make_shared<SHLRStructure>(decalage(*KP));

    // decomposition 0 -> R[1] ->> kept[1]
    auto Rs = shift_module(R, -1);
    GivenDecomposition dec;
    dec.mbar = Rs;
    dec.p1_images.resize(Rs->n_gens());
    for (int b = 0; b < nf; ++b) dec.p1_images[b] = shift_elem(*KM, label_over_kept[b], -1);
    for (size_t r = 0; r < syz.size(); ++r) dec.p1_images[nf + r] = ModElem();
    dec.section.resize(KM->n_gens());
    for (size_t kk = 0; kk < kept.size(); ++kk) dec.section[kk] = ModElem::gen(kept[kk]);

    LinearSHMorphism zero_f;
    auto Z = std::make_shared<SHLRStructure>();
    Z->base = A;
    Z->module = CellModule::zero_module(A);
    Z->W = W;
    Z->higher_vanish = true;
    zero_f.source = Z;
    zero_f.target = KT;
    zero_f.f0 = AlgMorphism::identity(A);
    zero_f.target_changed = base_change(zero_f.f0, KT->module);
    zero_f.W = W;
    auto fac = factorize_fixed_base(zero_f, w, dec);
    out.structure = fac.mbar;
    out.q = fac.project;
    out.target = KT;
    out.certificate.merge(check_shlr(*fac.mbar), "shlr");
    // q is strict by construction: p^k = 0 for k >= 2
    for (int k = 2; k <= W; ++k)
        out.certificate.require(out.q.f(k).is_zero(), "strict.w" + std::to_string(k), "");
    return out;
}

struct BVResolution {
    LRPtr input;                 // (A, F|_Sigma)
    GhostResolution ghosts;      // left leg (A, QM) -> (A, M)
    KoszulTateResult kt;
    BaseReplacement rep;         // right leg data: (QA, Q'M)
    TruncatedCE bv;              // the BV complex
    Report certificate;
};

/// Lift a cell module along a window quasi-isomorphism of algebras, with
/// stagewise d^2-corrections in the acyclic kernel.
inline ModPtr lift_cell_module(const AlgMorphism& rA, const ModPtr& M, const Window& w) {
    const AlgPtr& QA = rA.source;
    const AlgPtr& A = rA.target;
    if (M->base != A) throw argument_error("lift_cell_module: module not over the target");
    std::vector<Gen> gens = M->gens;
    std::vector<ModElem> diff(gens.size());
    auto monosQ = window_monomials(*QA, w.poly_degree_max);
    // partial module for correction solves grows as generators are processed
    for (int i = 0; i < M->n_gens(); ++i) {
        // naive coefficient lift
        ModElem naive;
        for (auto& [g, c] : M->diff[i].terms) {
            // solve rA(c~) = c, earliest pivot
            Deg d = A->degree_of(c);
            std::vector<Monomial> cand;
            for (auto& m : monosQ)
                if (QA->mono_degree(m) == d) cand.push_back(m);
            std::map<Monomial, int> col;
            std::vector<Monomial> rows;
            auto coord = [&](const Elem& e) {
                std::vector<std::pair<int, Rat>> o;
                for (auto& [m, q] : e.terms) {
                    auto it = col.find(m);
                    if (it == col.end()) {
                        col[m] = (int)rows.size();
                        rows.push_back(m);
                        it = col.find(m);
                    }
                    o.push_back({it->second, q});
                }
                return o;
            };
            std::vector<std::vector<std::pair<int, Rat>>> cols;
            for (auto& m : cand) cols.push_back(coord(rA.apply(Elem{{{m, Rat(1)}}})));
            auto tc = coord(c);
            SparseMat Amat((int)rows.size(), (int)cand.size());
            for (int j = 0; j < (int)cand.size(); ++j)
                for (auto& [r, q] : cols[j]) Amat.set(r, j, q);
            std::vector<Rat> b(rows.size(), Rat(0));
            for (auto& [r, q] : tc) b[r] = q;
            auto sol = solve_system(Amat, b);
            if (!sol) throw window_error("lift_cell_module: enlarge window");
            Elem lift;
            for (int j = 0; j < (int)cand.size(); ++j)
                if ((*sol)[j] != 0) lift += (*sol)[j] * Elem{{{cand[j], Rat(1)}}};
            naive.add_term(g, lift);
        }
        // correction: d(naive) must vanish under the partial differential
        auto partial = CellModule::make(QA, gens, [&] {
            auto dd = diff;
            dd.resize(gens.size());
            return dd;
        }(), false);
        ModElem defect = partial->d(naive);
        if (!defect.is_zero()) {
            // solve d(kappa) = -defect with rA-image of kappa zero
            auto V = truncate(partial, w);
            auto tc = V.coords(defect);
            if (!tc) throw window_error("lift_cell_module: defect escapes the window");
            // constraints: rA applied to each coefficient vanishes
            std::vector<SparseRow> cons;
            auto bit = V.C.basis.find(tc->first - 1);
            if (bit != V.C.basis.end()) {
                std::map<std::string, SparseRow> prow;
                for (int j = 0; j < bit->second.size(); ++j) {
                    const std::string& lab = bit->second.labels[j];
                    auto bar = lab.find('|');
                    Elem mono = parse_elem(*QA, lab.substr(0, bar));
                    Elem im = rA.apply(mono);
                    for (auto& [mm, q] : im.terms)
                        prow[lab.substr(bar + 1) + "|" + A->mono_str(mm)][j] += q;
                }
                for (auto& [k, row] : prow) cons.push_back(row);
            }
            std::vector<Rat> tgt = tc->second;
            for (auto& q : tgt) q = -q;
            auto sol = V.C.solve_boundary(tc->first, tgt, cons, false);
            if (!sol) throw window_error("lift_cell_module: window too small");
            naive += V.element(tc->first - 1, *sol);
        }
        diff[i] = naive;
    }
    return CellModule::make(QA, gens, diff, false);
}

/// The full BV pipeline: ghosts, Koszul-Tate, base replacement, and the CE
/// complex of the result (the BV complex), with certificates.
inline BVResolution bv_resolve(const Presentation& P, Deg depth, const Window& w, int W) {
    BVResolution out;
    AlgPtr oracle = quotient_window(P.ambient, P.ideal, w.poly_degree_max);
    out.input = restrict_distribution(P, w, oracle);
    out.ghosts = ghost_resolution(out.input, w, W);
    out.certificate.merge(out.ghosts.certificate, "ghosts");
    // left leg: q is a window weak equivalence (id on the base; q^1 cone)
    {
        ModMorphism q1{out.ghosts.structure->module, out.ghosts.q.target_changed, {}, 0};
        for (int i = 0; i < out.ghosts.structure->module->n_gens(); ++i)
            q1.images.push_back(out.ghosts.q.f(1).value({i}));
        bool ok = window_qiso(q1, w);
        out.certificate.require(ok, "left_leg.q1_qiso", ok ? "" : "ghost projection not a q-iso");
    }
    out.kt = koszul_tate(P, depth, w, oracle);
    out.certificate.merge(out.kt.certificate, "koszul_tate");
    // right leg: lift the resolution module over QA and replace the base
    auto QM = lift_cell_module(out.kt.proj, out.ghosts.structure->module, w);
    out.rep = replace_base(out.kt.proj, out.ghosts.structure, QM, w);
    out.certificate.merge(check_shlr(*out.rep.structure), "right_leg.shlr");
    out.bv = ce_complex(out.rep.structure);
    Report d2 = out.bv.check_d2();
    out.certificate.merge(d2, "bv_d2");
    return out;
}

}  // namespace shlr
