#pragma once

#include "shlr/module.hpp"
#include "shlr/parser.hpp"

#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace shlr {

/// Truncation context: cohomological degree range plus polynomial-degree cap.
struct Window {
    Deg degree_min = -4;
    Deg degree_max = 0;
    int poly_degree_max = 4;

    Window() = default;
    Window(Deg lo, Deg hi, int pmax) : degree_min(lo), degree_max(hi), poly_degree_max(pmax) {
        if (lo > hi) throw argument_error("window: degree_min > degree_max");
        if (pmax < 0) throw argument_error("window: negative poly_degree_max");
    }
    bool contains(Deg d) const { return degree_min <= d && d <= degree_max; }
    bool interior(Deg d) const { return degree_min < d && d < degree_max; }
};

struct DegBasis {
    std::vector<std::string> labels;
    std::map<std::string, int> pos;

    int add(const std::string& l) {
        auto it = pos.find(l);
        if (it != pos.end()) return it->second;
        pos[l] = (int)labels.size();
        labels.push_back(l);
        return (int)labels.size() - 1;
    }
    int size() const { return (int)labels.size(); }
};

/// Finite cochain complex on a window with exact rational differentials.
/// dmat[k] maps degree k to k+1: rows = target basis, cols = source basis.
struct TruncatedComplex {
    Window w;
    std::map<Deg, DegBasis> basis;
    std::map<Deg, SparseMat> dmat;
    std::set<Deg> overflowed;               // degrees with escaping columns
    std::map<Deg, std::set<int>> bad_cols;  // columns whose image escaped

    void flag_column(Deg d, int col) {
        overflowed.insert(d);
        bad_cols[d].insert(col);
    }
    bool column_ok(Deg d, int col) const {
        auto it = bad_cols.find(d);
        return it == bad_cols.end() || !it->second.count(col);
    }

    int dim(Deg d) const {
        auto it = basis.find(d);
        return it == basis.end() ? 0 : it->second.size();
    }
    const SparseMat& d_of(Deg d) const {
        static const SparseMat empty;
        auto it = dmat.find(d);
        return it == dmat.end() ? empty : it->second;
    }

    /// d_{k+1} o d_k = 0 wherever both matrices are inside the window.
    bool square_zero() const {
        for (auto& [k, m] : dmat) {
            auto it = dmat.find(k + 1);
            if (it == dmat.end()) continue;
            if (overflowed.count(k) || overflowed.count(k + 1)) continue;
            if (!it->second.mul(m).is_zero()) return false;
        }
        return true;
    }

    bool reliable(Deg d) const {
        if (!w.interior(d)) return false;
        if (overflowed.count(d) || overflowed.count(d - 1)) return false;
        return true;
    }

    struct Cohomology {
        std::map<Deg, int> dim;                                  // per degree
        std::map<Deg, std::vector<std::vector<Rat>>> reps;       // cycle representatives
        std::set<Deg> unreliable;
    };

    Cohomology cohomology() const {
        Cohomology H;
        for (auto& [d, b] : basis) {
            if (!reliable(d)) H.unreliable.insert(d);
            SparseMat dk = d_of(d);
            if (dk.rows == 0 && dk.cols == 0) dk = SparseMat(dim(d + 1), dim(d));
            // escaping columns cannot be certified as cycles: restrict to the
            // good columns, then embed kernel vectors back
            std::vector<int> good;
            for (int j = 0; j < dk.cols; ++j)
                if (column_ok(d, j)) good.push_back(j);
            std::vector<std::vector<Rat>> cycles;
            if (dk.cols == 0) {
                // no basis in this degree
            } else if (dk.rows == 0) {
                for (int j : good) {
                    std::vector<Rat> e(dk.cols, Rat(0));
                    e[j] = 1;
                    cycles.push_back(std::move(e));
                }
            } else {
                SparseMat sub(dk.rows, (int)good.size());
                for (int jj = 0; jj < (int)good.size(); ++jj)
                    for (int i = 0; i < dk.rows; ++i) {
                        Rat v = dk.get(i, good[jj]);
                        if (v != 0) sub.set(i, jj, v);
                    }
                for (auto& kv : kernel_basis(sub)) {
                    std::vector<Rat> e(dk.cols, Rat(0));
                    for (int jj = 0; jj < (int)good.size(); ++jj) e[good[jj]] = kv[jj];
                    cycles.push_back(std::move(e));
                }
            }
            // reduce cycles by the image of the good columns of d_{d-1}
            const SparseMat& dprev = d_of(d - 1);
            std::vector<SparseRow> rows;
            for (int j = 0; j < dprev.cols; ++j) {
                if (!column_ok(d - 1, j)) continue;
                SparseRow r;
                for (int i = 0; i < dprev.rows; ++i) {
                    Rat v = dprev.get(i, j);
                    if (v != 0) r[i] = v;
                }
                if (!r.empty()) rows.push_back(std::move(r));
            }
            Echelon im = echelon_form(rows, dim(d));
            auto reduce_vec = [&](std::vector<Rat> v) {
                for (int i = 0; i < im.rank(); ++i) {
                    Rat c = v[im.pivot_col[i]];
                    if (c == 0) continue;
                    for (auto& [j, x] : im.rows[i]) v[j] -= c * x;
                }
                return v;
            };
            std::vector<SparseRow> rep_rows;
            std::vector<std::vector<Rat>> red;
            for (auto& v : cycles) {
                auto rv = reduce_vec(v);
                SparseRow r;
                for (int j = 0; j < (int)rv.size(); ++j)
                    if (rv[j] != 0) r[j] = rv[j];
                if (!r.empty()) {
                    rep_rows.push_back(r);
                    red.push_back(rv);
                }
            }
            Echelon rech = echelon_form(rep_rows, dim(d));
            H.dim[d] = rech.rank();
            for (int i = 0; i < rech.rank(); ++i) {
                std::vector<Rat> v(dim(d), Rat(0));
                for (auto& [j, x] : rech.rows[i]) v[j] = x;
                H.reps[d].push_back(std::move(v));
            }
        }
        return H;
    }

    /// True when every reliable interior degree has vanishing cohomology.
    bool acyclic_interior() const {
        auto H = cohomology();
        for (auto& [d, n] : H.dim)
            if (reliable(d) && n != 0) return false;
        return true;
    }

    /// Solve d u = target (target in degree `deg`), earliest-pivot, free
    /// variables zero; optional homogeneous constraints rows on u.
    std::optional<std::vector<Rat>> solve_boundary(Deg deg, const std::vector<Rat>& target,
                                                   const std::vector<SparseRow>& constraints = {},
                                                   bool check_cycle = true) const {
        if ((int)target.size() != dim(deg)) throw argument_error("solve_boundary: bad target size");
        if (check_cycle) {
            const SparseMat& dk = d_of(deg);
            if (dk.rows > 0) {
                std::vector<Rat> img(dk.rows, Rat(0));
                bool nonzero = false;
                for (int i = 0; i < dk.rows; ++i) {
                    Rat acc(0);
                    for (int j = 0; j < dk.cols; ++j) {
                        Rat v = dk.get(i, j);
                        if (v != 0) acc += v * target[j];
                    }
                    if (acc != 0) nonzero = true;
                    img[i] = acc;
                }
                (void)img;
                if (nonzero) throw precondition_error("solve_boundary: target is not a cycle");
            }
        }
        const SparseMat& dprev = d_of(deg - 1);
        int ucols = dim(deg - 1);
        SparseMat A(dim(deg) + (int)constraints.size(), ucols);
        for (int i = 0; i < dprev.rows; ++i)
            for (auto& [j, v] : dprev.row[i]) A.set(i, j, v);
        std::vector<Rat> b = target;
        for (size_t c = 0; c < constraints.size(); ++c) {
            for (auto& [j, v] : constraints[c]) A.set(dim(deg) + (int)c, j, v);
            b.push_back(Rat(0));
        }
        return solve_system(A, b);
    }
};

/// View of a CellModule truncated to a window. Basis labels are
/// "monomial|generator".
struct ModuleComplex {
    ModPtr M;
    Window w;
    TruncatedComplex C;

    static std::string key(const Algebra& A, const Monomial& mono, const std::string& gname) {
        return A.mono_str(mono) + "|" + gname;
    }

    std::optional<std::pair<Deg, std::vector<Rat>>> coords(const ModElem& m) const {
        if (m.is_zero()) return std::nullopt;
        Deg d = M->degree_of(m);
        std::vector<Rat> v(C.dim(d), Rat(0));
        auto bit = C.basis.find(d);
        for (auto& [g, c] : m.terms)
            for (auto& [mono, q] : c.terms) {
                std::string k = key(*M->base, mono, M->gen_name(g));
                if (bit == C.basis.end()) return std::nullopt;
                auto it = bit->second.pos.find(k);
                if (it == bit->second.pos.end()) return std::nullopt;  // outside window
                v[it->second] = q;
            }
        return std::make_pair(d, std::move(v));
    }

    ModElem element(Deg d, const std::vector<Rat>& v) const {
        ModElem out;
        auto bit = C.basis.find(d);
        if (bit == C.basis.end()) return out;
        for (int j = 0; j < (int)v.size(); ++j) {
            if (v[j] == 0) continue;
            const std::string& lab = bit->second.labels[j];
            auto bar = lab.find('|');
            Elem mono = parse_mono(lab.substr(0, bar));
            out.add_term(M->gen_index(lab.substr(bar + 1)), v[j] * mono);
        }
        return out;
    }

    Elem parse_mono(const std::string& s) const;
};

/// Enumerate all normal-form monomials of A with poly degree <= pmax.
inline std::vector<Monomial> window_monomials(const Algebra& A, int pmax) {
    std::vector<Monomial> out;
    Monomial cur;
    std::function<void(int, int)> gen = [&](int g, int room) {
        if (g == A.n_gens()) {
            if (!A.oracle || !A.oracle->reducers.count(cur)) out.push_back(cur);
            return;
        }
        int cap = is_odd(A.gen_degree(g)) ? 1 : room;
        for (int e = 0; e <= std::min(cap, room); ++e) {
            if (e > 0) cur.factors.push_back({g, e});
            gen(g + 1, room - e);
            if (e > 0) cur.factors.pop_back();
        }
    };
    gen(0, pmax);
    return out;
}

inline Elem ModuleComplex::parse_mono(const std::string& s) const {
    return parse_elem(*M->base, s);
}

/// truncate: basis = monomial x generator inside the window, differential
/// matrices restricted, escaping columns flagged.
inline ModuleComplex truncate(const ModPtr& M, const Window& w) {
    ModuleComplex V;
    V.M = M;
    V.w = w;
    V.C.w = w;
    auto monos = window_monomials(*M->base, w.poly_degree_max);
    for (int g = 0; g < M->n_gens(); ++g)
        for (auto& mono : monos) {
            Deg d = M->base->mono_degree(mono) + M->gen_degree(g);
            if (!w.contains(d)) continue;
            V.C.basis[d].add(ModuleComplex::key(*M->base, mono, M->gen_name(g)));
        }
    for (auto& [d, b] : V.C.basis) {
        SparseMat mat(V.C.dim(d + 1), b.size());
        for (int j = 0; j < b.size(); ++j) {
            const std::string& lab = b.labels[j];
            auto bar = lab.find('|');
            Elem mono = parse_elem(*M->base, lab.substr(0, bar));
            ModElem x;
            x.add_term(M->gen_index(lab.substr(bar + 1)), mono);
            ModElem dx;
            try {
                dx = M->d(x);
            } catch (const window_error&) {
                if (d + 1 <= w.degree_max) V.C.flag_column(d, j);
                continue;
            }
            for (auto& [g, c] : dx.terms)
                for (auto& [mm, q] : c.terms) {
                    std::string k = ModuleComplex::key(*M->base, mm, M->gen_name(g));
                    auto bit = V.C.basis.find(d + 1);
                    int row = -1;
                    if (bit != V.C.basis.end()) {
                        auto it = bit->second.pos.find(k);
                        if (it != bit->second.pos.end()) row = it->second;
                    }
                    if (row < 0) {
                        if (d + 1 <= w.degree_max) V.C.flag_column(d, j);
                        continue;  // escapes the window
                    }
                    mat.add(row, j, q);
                }
        }
        V.C.dmat[d] = std::move(mat);
    }
    return V;
}

/// Per-degree cohomology dimensions and representative cycles of a module.
inline TruncatedComplex::Cohomology cohomology(const ModPtr& M, const Window& w) {
    return truncate(M, w).C.cohomology();
}

/// Standard mapping cone of a chain map f : M -> N.
/// Cone^k = M^{k+1} (+) N^k; on generators: d(n) = d_N n, d(m~) = -d_M m~ + f(m).
inline ModPtr mapping_cone(const ModMorphism& f) {
    Report chain = f.check_chain_map();
    if (!chain.ok()) {
        std::string offender;
        for (auto& it : chain.items)
            if (it.verdict == Verdict::Fail) {
                offender = it.check + ": " + it.witness;
                break;
            }
        throw precondition_error("mapping_cone: not a chain map (" + offender + ")");
    }
    const ModPtr& M = f.source;
    const ModPtr& N = f.target;
    if (M->base != N->base) throw argument_error("mapping_cone: different bases");
    std::vector<Gen> gens;
    std::vector<ModElem> diff;
    for (int i = 0; i < N->n_gens(); ++i) {
        gens.push_back(N->gens[i]);
        diff.push_back(N->diff[i]);
    }
    int off = N->n_gens();
    for (int i = 0; i < M->n_gens(); ++i)
        gens.push_back({M->gen_name(i) + "~", M->gen_degree(i) - 1});
    for (int i = 0; i < M->n_gens(); ++i) {
        ModElem img;
        // -(d_M m) shifted into the cone; coefficient twist for the shift
        for (auto& [g, c] : M->diff[i].terms)
            img.add_term(off + g, Rat(-1) * sign_by_degree(*M->base, c));
        // + f(m), landing in the N part
        ModElem fm = f.images[i];
        for (auto& [g, c] : fm.terms) img.add_term(g, c);
        diff.push_back(img);
    }
    return CellModule::make(N->base, gens, diff, /*require_lowering=*/false);
}

/// f is a window quasi-isomorphism iff its cone is acyclic on the interior.
inline bool window_qiso(const ModMorphism& f, const Window& w) {
    auto cone = mapping_cone(f);
    return truncate(cone, w).C.acyclic_interior();
}

/// A-multilinear graded-symmetric maps Sym^k M -> N in a window.
/// Basis labels: "g1,g2,..,gk->mono|target" (sorted source tuples).
struct HomComplex {
    ModPtr M, N;
    int weight = 1;
    Window w;
    TruncatedComplex C;
    // key: sorted tuple of source gens; value monomial; target gen
    struct Key {
        std::vector<int> tuple;
        Monomial mono;
        int target = 0;
    };
    std::map<Deg, std::vector<Key>> keys;

    std::string label(const Key& k) const {
        std::string s;
        for (int t : k.tuple) s += M->gen_name(t) + ",";
        s += "->" + M->base->mono_str(k.mono) + "|" + N->gen_name(k.target);
        return s;
    }
};

/// Enumerate sorted weight-k tuples of module generators (odd generators
/// never repeat: Sym kills odd squares).
inline std::vector<std::vector<int>> symmetric_tuples(const CellModule& M, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int, int)> rec = [&](int g, int room) {
        if (room == 0) {
            out.push_back(cur);
            return;
        }
        if (g >= M.n_gens()) return;
        int cap = is_odd(M.gen_degree(g)) ? 1 : room;
        for (int e = 0; e <= cap; ++e) {
            for (int t = 0; t < e; ++t) cur.push_back(g);
            rec(g + 1, room - e);
            for (int t = 0; t < e; ++t) cur.pop_back();
        }
    };
    rec(0, k);
    std::sort(out.begin(), out.end());
    return out;
}

inline Deg tuple_degree(const CellModule& M, const std::vector<int>& t) {
    Deg d = 0;
    for (int g : t) d += M.gen_degree(g);
    return d;
}

/// One multilinear summand: q * coeff * generator.
struct ArgTerm {
    Rat q;
    Monomial coeff;
    int gen = 0;
};

inline Deg argterm_degree(const CellModule& M, const ArgTerm& t) {
    return M.base->mono_degree(t.coeff) + M.gen_degree(t.gen);
}

/// Expand a list of module elements into tuples of single terms.
inline void expand_args(const CellModule& M, const std::vector<ModElem>& args,
                        const std::function<void(std::vector<ArgTerm>&)>& visit) {
    std::vector<ArgTerm> cur(args.size());
    std::function<void(size_t)> rec = [&](size_t i) {
        if (i == args.size()) {
            visit(cur);
            return;
        }
        for (auto& [g, c] : args[i].terms)
            for (auto& [mono, q] : c.terms) {
                cur[i] = ArgTerm{q, mono, g};
                rec(i + 1);
            }
    };
    rec(0);
}

/// Sort a term tuple by generator index with the Koszul sign of the full
/// term degrees. Returns the sign.
inline int sort_terms(const CellModule& M, std::vector<ArgTerm>& ts) {
    int sign = 1;
    for (size_t i = 0; i + 1 < ts.size(); ++i)
        for (size_t j = 0; j + 1 < ts.size() - i; ++j)
            if (ts[j].gen > ts[j + 1].gen) {
                if (is_odd(argterm_degree(M, ts[j])) && is_odd(argterm_degree(M, ts[j + 1])))
                    sign = -sign;
                std::swap(ts[j], ts[j + 1]);
            }
    return sign;
}

/// A-multilinear graded-symmetric map Sym^k M -> N given by values on sorted
/// bare generator tuples. Extraction sign of the coefficient a_i across the
/// map (degree |u|) and the preceding bare generators:
///   (-1)^{|a_i| (|u| + |g_1| + ... + |g_{i-1}|)}.
struct SymMap {
    ModPtr source, target;
    int weight = 1;
    Deg degree = 0;
    std::map<std::vector<int>, ModElem> values;

    static SymMap zero(ModPtr src, ModPtr tgt, int k, Deg deg) {
        return SymMap{std::move(src), std::move(tgt), k, deg, {}};
    }

    bool is_zero() const {
        for (auto& [t, v] : values)
            if (!v.is_zero()) return false;
        return true;
    }

    ModElem value(const std::vector<int>& sorted_tuple) const {
        auto it = values.find(sorted_tuple);
        return it == values.end() ? ModElem() : it->second;
    }
    void set_value(const std::vector<int>& sorted_tuple, const ModElem& v) {
        if (v.is_zero())
            values.erase(sorted_tuple);
        else
            values[sorted_tuple] = v;
    }

    ModElem eval_terms(std::vector<ArgTerm> ts) const {
        int sgn = sort_terms(*source, ts);
        Rat q(sgn);
        Elem coeff = Elem::one();
        Deg bare_prefix = 0;
        const Algebra& A = *source->base;
        std::vector<int> tuple;
        for (auto& t : ts) {
            q *= t.q;
            Deg ad = A.mono_degree(t.coeff);
            if (is_odd(ad) && is_odd(degree + bare_prefix)) q = -q;
            coeff = A.mul(coeff, Elem{{{t.coeff, Rat(1)}}});
            bare_prefix += source->gen_degree(t.gen);
            tuple.push_back(t.gen);
        }
        if (q == 0 || coeff.is_zero()) return ModElem();
        ModElem base_val = value(tuple);
        return q * target->scale(coeff, base_val);
    }

    ModElem eval(const std::vector<ModElem>& args) const {
        if ((int)args.size() != weight) throw argument_error("SymMap: arity mismatch");
        ModElem out;
        expand_args(*source, args, [&](std::vector<ArgTerm>& ts) { out += eval_terms(ts); });
        return out;
    }

    SymMap& operator+=(const SymMap& o) {
        for (auto& [t, v] : o.values) set_value(t, value(t) + v);
        return *this;
    }
    SymMap& operator-=(const SymMap& o) {
        for (auto& [t, v] : o.values) set_value(t, value(t) - v);
        return *this;
    }
    friend SymMap operator*(const Rat& c, SymMap m) {
        for (auto& [t, v] : m.values) v = c * v;
        return m;
    }
};

/// Coderivation extension of the source differential to Sym^k and the
/// Hom-complex differential [d, u] = d_N o u - (-1)^{|u|} u o d_{Sym^k}.
inline SymMap hom_differential(const SymMap& u) {
    SymMap out = SymMap::zero(u.source, u.target, u.weight, u.degree + 1);
    const CellModule& M = *u.source;
    for (auto t : symmetric_tuples(M, u.weight)) {
        ModElem val = u.target->d(u.value(t));
        int usgn = is_odd(u.degree) ? -1 : 1;
        Deg prefix = 0;
        for (int i = 0; i < (int)t.size(); ++i) {
            ModElem di = M.diff[t[i]];
            if (!di.is_zero()) {
                std::vector<ModElem> args;
                for (int j = 0; j < (int)t.size(); ++j)
                    args.push_back(j == i ? di : ModElem::gen(t[j]));
                int s = is_odd(prefix) ? -1 : 1;
                val -= Rat(usgn * s) * u.eval(args);
            }
            prefix += M.gen_degree(t[i]);
        }
        out.set_value(t, val);
    }
    return out;
}

/// Hom-complex of A-multilinear maps Sym^k M -> N on a window.
struct HomComplexView {
    ModPtr M, N;
    int weight = 1;
    Window w;
    TruncatedComplex C;
    struct Key {
        std::vector<int> tuple;
        Monomial mono;
        int target = 0;
    };
    std::map<Deg, std::vector<Key>> keys;

    std::string label(const Key& k) const {
        std::string s;
        for (size_t i = 0; i < k.tuple.size(); ++i)
            s += (i ? "," : "") + M->gen_name(k.tuple[i]);
        return s + "->" + M->base->mono_str(k.mono) + "|" + N->gen_name(k.target);
    }

    SymMap map_of(Deg d, const std::vector<Rat>& v) const {
        SymMap u = SymMap::zero(M, N, weight, d);
        auto it = keys.find(d);
        if (it == keys.end()) return u;
        for (int j = 0; j < (int)v.size(); ++j) {
            if (v[j] == 0) continue;
            const Key& k = it->second[j];
            ModElem val = u.value(k.tuple);
            val.add_term(k.target, v[j] * Elem{{{k.mono, Rat(1)}}});
            u.set_value(k.tuple, val);
        }
        return u;
    }

    /// Coordinates of a SymMap whose values stay inside the window;
    /// nullopt when a value escapes.
    std::optional<std::vector<Rat>> coords_of(const SymMap& u, Deg d) const {
        std::vector<Rat> v(C.dim(d), Rat(0));
        auto bit = C.basis.find(d);
        for (auto& [t, val] : u.values) {
            for (auto& [g, c] : val.terms)
                for (auto& [mono, q] : c.terms) {
                    Key k{t, mono, g};
                    if (bit == C.basis.end()) return std::nullopt;
                    auto it = bit->second.pos.find(label(k));
                    if (it == bit->second.pos.end()) return std::nullopt;
                    v[it->second] = q;
                }
        }
        return v;
    }
};

inline HomComplexView hom_complex(const ModPtr& M, const ModPtr& N, const Window& w, int weight) {
    HomComplexView V;
    V.M = M;
    V.N = N;
    V.weight = weight;
    V.w = w;
    V.C.w = w;
    auto tuples = symmetric_tuples(*M, weight);
    auto monos = window_monomials(*M->base, w.poly_degree_max);
    for (auto& t : tuples) {
        Deg td = tuple_degree(*M, t);
        for (int g = 0; g < N->n_gens(); ++g)
            for (auto& mono : monos) {
                Deg d = M->base->mono_degree(mono) + N->gen_degree(g) - td;
                if (!w.contains(d)) continue;
                HomComplexView::Key k{t, mono, g};
                int idx = V.C.basis[d].add(V.label(k));
                if (idx == (int)V.keys[d].size()) V.keys[d].push_back(k);
            }
    }
    for (auto& [d, b] : V.C.basis) {
        SparseMat mat(V.C.dim(d + 1), b.size());
        for (int j = 0; j < b.size(); ++j) {
            std::vector<Rat> unit(b.size(), Rat(0));
            unit[j] = 1;
            SymMap u = V.map_of(d, unit);
            std::optional<std::vector<Rat>> coords;
            try {
                SymMap du = hom_differential(u);
                coords = V.coords_of(du, d + 1);
            } catch (const window_error&) {
                coords = std::nullopt;
            }
            if (!coords) {
                V.C.flag_column(d, j);
                continue;
            }
            for (int i = 0; i < (int)coords->size(); ++i)
                if ((*coords)[i] != 0) mat.add(i, j, (*coords)[i]);
        }
        V.C.dmat[d] = std::move(mat);
    }
    return V;
}

/// Solve  sum_j c_j * gens_j = target  for window-bounded coefficients c_j in
/// A; earliest-pivot deterministic, nullopt when unsolvable in the window.
inline std::optional<std::vector<Elem>> solve_a_combination(const ModPtr& M,
                                                            const std::vector<ModElem>& gens,
                                                            const ModElem& target,
                                                            const Window& w) {
    if (target.is_zero()) return std::vector<Elem>(gens.size());
    Deg td = M->degree_of(target);
    auto MV = truncate(M, w);
    auto tc = MV.coords(target);
    if (!tc) throw window_error("solve_a_combination: target outside window");
    auto monos = window_monomials(*M->base, w.poly_degree_max);
    struct Unknown {
        int j;
        Monomial mono;
    };
    std::vector<Unknown> unknowns;
    std::vector<std::vector<Rat>> cols;
    for (int j = 0; j < (int)gens.size(); ++j) {
        if (gens[j].is_zero()) continue;
        Deg gd = M->degree_of(gens[j]);
        for (auto& mono : monos) {
            if (M->base->mono_degree(mono) + gd != td) continue;
            try {
                ModElem scaled = M->scale(Elem{{{mono, Rat(1)}}}, gens[j]);
                auto c = MV.coords(scaled);
                if (!c) continue;
                unknowns.push_back({j, mono});
                cols.push_back(c->second);
            } catch (const window_error&) {
                continue;  // candidate escapes the oracle window
            }
        }
    }
    SparseMat A((int)tc->second.size(), (int)unknowns.size());
    for (int j = 0; j < (int)unknowns.size(); ++j)
        for (int i = 0; i < A.rows; ++i)
            if (cols[j][i] != 0) A.set(i, j, cols[j][i]);
    auto sol = solve_system(A, tc->second);
    if (!sol) return std::nullopt;
    std::vector<Elem> out(gens.size());
    for (int j = 0; j < (int)unknowns.size(); ++j)
        if ((*sol)[j] != 0) out[unknowns[j].j] += (*sol)[j] * Elem{{{unknowns[j].mono, Rat(1)}}};
    return out;
}

/// Topologically order generators so the differential lowers, then build the
/// cell module. Throws when the dependency graph is cyclic.
inline ModPtr make_cell_ordered(AlgPtr base, std::vector<Gen> gens, std::vector<ModElem> diff) {
    int n = (int)gens.size();
    std::vector<std::set<int>> deps(n);
    for (int i = 0; i < n; ++i)
        for (auto& [g, c] : diff[i].terms) deps[i].insert(g);
    std::vector<int> order;
    std::vector<char> done(n, 0);
    bool progress = true;
    while ((int)order.size() < n && progress) {
        progress = false;
        for (int i = 0; i < n; ++i) {
            if (done[i]) continue;
            bool ready = true;
            for (int g : deps[i])
                if (!done[g]) {
                    ready = false;
                    break;
                }
            if (ready) {
                done[i] = 1;
                order.push_back(i);
                progress = true;
            }
        }
    }
    if ((int)order.size() < n)
        throw argument_error("cell ordering: differential dependencies are cyclic");
    std::vector<int> newpos(n);
    for (int k = 0; k < n; ++k) newpos[order[k]] = k;
    std::vector<Gen> g2(n);
    std::vector<ModElem> d2(n);
    for (int i = 0; i < n; ++i) {
        g2[newpos[i]] = gens[i];
        ModElem img;
        for (auto& [g, c] : diff[i].terms) img.add_term(newpos[g], c);
        d2[newpos[i]] = img;
    }
    return CellModule::make(std::move(base), std::move(g2), std::move(d2));
}

/// Split model of the fiber product of  f : M -> P  and  g : N -> P  (g
/// window-surjective with a generator-level section): generators are the
/// M-leg (m, s f(m)) together with a free basis of Ker(g).
struct FiberProduct {
    ModPtr module;
    ModMorphism to_m;  // first projection
    ModMorphism to_n;  // second projection
};

inline FiberProduct fiber_product(const ModMorphism& f, const ModMorphism& g, const Window& w) {
    const ModPtr& M = f.source;
    const ModPtr& N = g.source;
    const ModPtr& P0 = f.target;
    if (g.target != P0) throw argument_error("fiber_product: mismatched cospan");
    if (M->base != N->base || M->base != P0->base)
        throw argument_error("fiber_product: different bases");
    // generator-level section of g
    std::vector<ModElem> ngens;
    for (int j = 0; j < N->n_gens(); ++j) ngens.push_back(ModElem::gen(j));
    std::vector<ModElem> gimages;
    for (int j = 0; j < N->n_gens(); ++j) gimages.push_back(g.images[j]);
    std::vector<ModElem> section(P0->n_gens());
    for (int i = 0; i < P0->n_gens(); ++i) {
        auto sol = solve_a_combination(P0, gimages, ModElem::gen(i), w);
        if (!sol) throw precondition_error("pullback not computable: non-surjective leg");
        ModElem s;
        for (int j = 0; j < N->n_gens(); ++j) s += N->scale((*sol)[j], ModElem::gen(j));
        section[i] = s;
    }
    auto apply_section = [&](const ModElem& p) {
        ModElem out;
        for (auto& [i, c] : p.terms) out += N->scale(c, section[i]);
        return out;
    };
    // pivot structure: constant coefficients of the section must have full rank
    std::vector<SparseRow> s0(P0->n_gens());
    for (int i = 0; i < P0->n_gens(); ++i)
        for (auto& [j, c] : section[i].terms) {
            auto it = c.terms.find(Monomial{});
            if (it != c.terms.end()) s0[i][j] = it->second;
        }
    Echelon ech = echelon_form(s0, N->n_gens());
    if (ech.rank() < P0->n_gens())
        throw precondition_error("pullback not computable: no generator-level section");
    std::set<int> pivots(ech.pivot_col.begin(), ech.pivot_col.end());

    std::vector<int> kgens;  // non-pivot N generators carry the kernel basis
    for (int j = 0; j < N->n_gens(); ++j)
        if (!pivots.count(j)) kgens.push_back(j);
    std::vector<ModElem> kappa;  // kernel basis elements in N
    for (int j : kgens) kappa.push_back(ModElem::gen(j) - apply_section(g.images[j]));

    // N-part of a pair decomposes as s(g(n)) + kernel; kernel expressed in kappa
    auto kernel_coords = [&](const ModElem& z) {
        auto sol = solve_a_combination(N, kappa, z, w);
        if (!sol) throw window_error("fiber_product: kernel expression escapes window");
        return *sol;
    };

    // generators of the fiber product
    std::vector<Gen> gens;
    std::vector<ModElem> mleg_n;  // N-component of each M-leg generator
    for (int i = 0; i < M->n_gens(); ++i) {
        gens.push_back({"fp_" + M->gen_name(i), M->gen_degree(i)});
        mleg_n.push_back(apply_section(f.images[i]));
    }
    for (size_t k = 0; k < kgens.size(); ++k)
        gens.push_back({"fk_" + N->gen_name(kgens[k]), N->gen_degree(kgens[k])});
    int off = M->n_gens();

    // decompose a pair (x in M, y in N) with g(y) = f(x) into generator coords
    auto decompose = [&](const ModElem& x, const ModElem& y) {
        ModElem out;
        ModElem rem = y;
        for (auto& [i, c] : x.terms) {
            out.add_term(i, c);
            rem -= N->scale(c, mleg_n[i]);
        }
        auto ks = kernel_coords(rem);
        for (size_t k = 0; k < ks.size(); ++k) out.add_term(off + (int)k, ks[k]);
        return out;
    };

    std::vector<ModElem> diff;
    for (int i = 0; i < M->n_gens(); ++i) diff.push_back(decompose(M->diff[i], N->d(mleg_n[i])));
    for (int j : kgens)
        diff.push_back(decompose(ModElem(), N->d(ModElem::gen(j) - apply_section(g.images[j]))));

    // assemble with a lowering order
    auto module = make_cell_ordered(M->base, gens, diff);
    // projections: track the permutation applied by make_cell_ordered via names
    ModMorphism to_m{module, M, {}, 0};
    ModMorphism to_n{module, N, {}, 0};
    for (int i = 0; i < module->n_gens(); ++i) {
        const std::string& nm = module->gen_name(i);
        if (nm.rfind("fp_", 0) == 0) {
            int mi = M->gen_index(nm.substr(3));
            to_m.images.push_back(ModElem::gen(mi));
            to_n.images.push_back(mleg_n[mi]);
        } else {
            int nj = N->gen_index(nm.substr(3));
            to_m.images.push_back(ModElem());
            to_n.images.push_back(ModElem::gen(nj) - apply_section(g.images[nj]));
        }
    }
    return FiberProduct{module, to_m, to_n};
}

}  // namespace shlr
