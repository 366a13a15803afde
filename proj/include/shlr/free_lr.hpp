#pragma once

#include "shlr/lr.hpp"

namespace shlr {

/// Module with an A-linear anchor into Der(A) (and no bracket yet).
struct AnchoredModule {
    ModPtr module;
    std::vector<Derivation> anchor;  // per generator, degree = generator degree

    Report check() const {
        Report r;
        for (int i = 0; i < module->n_gens(); ++i) {
            bool dg = anchor[i].degree == module->gen_degree(i);
            r.require(dg, "anchor_degree." + module->gen_name(i), "degree mismatch");
            // chain map: Gamma(d m) = d_Der(Gamma m)
            Derivation lhs = Derivation::zero(module->base, module->gen_degree(i) + 1);
            for (auto& [g, c] : module->diff[i].terms)
                for (int k = 0; k < module->base->n_gens(); ++k)
                    lhs.images[k] += module->base->mul(c, anchor[g].images[k]);
            Derivation rhs = der_differential(anchor[i]);
            r.require(lhs.images == rhs.images, "anchor_chain." + module->gen_name(i),
                      "anchor is not a chain map");
        }
        return r;
    }
};

/// Free Lie-Rinehart pair on an anchored module, truncated at total weight K.
struct FreeLRPair {
    LRPtr pair;
    AnchoredModule input;
    int weight_bound = 1;
    FreeLie lie{{}};
    std::map<int, std::vector<int>> per_weight;  // tag-weight -> module gen indices
    ModMorphism include;                         // input -> pair.module
    // tree bookkeeping: per pair-module generator, the basis element
    std::vector<FreeLie::BasisElem> tree_of;
};

/// Hall/Lyndon tree family for the free graded Lie algebra; for even
/// degree-0 generators the counts match the Witt formula.
inline std::vector<std::string> hall_basis(const std::vector<Gen>& gens, int weight) {
    std::vector<Deg> degs;
    std::vector<std::string> names;
    for (auto& g : gens) {
        degs.push_back(g.degree);
        names.push_back(g.name);
    }
    FreeLie L(degs);
    std::vector<std::string> out;
    for (auto& b : L.basis(weight)) out.push_back(L.tree_str(b, names));
    return out;
}

inline int tree_of_word(const FreeLie& lie, const std::map<std::pair<int, int>, int>& tree_index,
                        const Word& w);
inline Derivation src_word_anchor(const FreeLRPair& src, const Word& w);
inline ModElem lrmor_combine(const FreeLRPair& src, const FreeLRPair& tgt, const AlgMorphism& f0,
                             const ModPtr& tgt_changed, const ModElem& fx, const ModElem& fy,
                             const Derivation& ax, const Derivation& ay, Deg dx, Deg dy);

/// Free graded LR pair on graded anchored generators (no differential yet):
/// the Hall-tree module, bracket tables, and extended anchors.
struct GradedFreeLR {
    FreeLie lie{{}};
    struct Tree {
        FreeLie::BasisElem b;
        int arity;
        int tag;
    };
    std::vector<Tree> trees;
    std::map<std::pair<int, int>, int> tree_index;  // (arity, basis idx) -> tree
    std::vector<Gen> gens;
    std::vector<Derivation> anchors;
    DGLRPair prov;  // pair without differential, for bracket evaluation
};

inline GradedFreeLR free_graded_lr(const AlgPtr& A, const std::vector<Gen>& letters,
                                   const std::vector<Derivation>& anchor, int K,
                                   std::vector<int> tags) {
    GradedFreeLR G;
    int n = (int)letters.size();
    if (tags.empty()) tags.assign(n, 1);
    std::vector<Deg> letter_deg;
    std::vector<std::string> letter_name;
    for (auto& g : letters) {
        letter_deg.push_back(g.degree);
        letter_name.push_back(g.name);
    }
    G.lie = FreeLie(letter_deg);
    FreeLie& lie = G.lie;

    auto word_tag = [&](const Word& w) {
        int t = 0;
        for (int a : w) t += tags[a];
        return t;
    };
    for (int a = 1; a <= K; ++a) {
        auto& bs = lie.basis(a);
        for (int bi = 0; bi < (int)bs.size(); ++bi) {
            int t = bs[bi].square ? 2 * word_tag(bs[bi].word) : word_tag(bs[bi].word);
            if (t <= K) {
                G.tree_index[{a, bi}] = (int)G.trees.size();
                G.trees.push_back({bs[bi], a, t});
            }
        }
    }

    std::map<std::string, Derivation> anchor_cache;
    std::function<Derivation(const Word&)> anchor_word = [&](const Word& w) -> Derivation {
        std::string key;
        for (int a : w) key += std::to_string(a) + ",";
        auto it = anchor_cache.find(key);
        if (it != anchor_cache.end()) return it->second;
        Derivation out = Derivation::zero(A, 0);
        if (w.size() == 1) {
            out = anchor[w[0]];
        } else {
            auto [u, v] = FreeLie::standard_factorization(w);
            out = der_bracket(anchor_word(u), anchor_word(v));
        }
        anchor_cache.emplace(key, out);
        return out;
    };
    for (auto& t : G.trees) {
        Deg d = t.b.square ? 2 * lie.word_degree(t.b.word) : lie.word_degree(t.b.word);
        G.gens.push_back({lie.tree_str(t.b, letter_name), d});
        Derivation aw = anchor_word(t.b.word);
        G.anchors.push_back(t.b.square ? der_bracket(aw, aw) : aw);
    }

    G.prov.base = A;
    G.prov.module = CellModule::make(A, G.gens, {}, false);
    G.prov.anchor = G.anchors;
    G.prov.weight_cap = K;
    for (auto& t : G.trees) G.prov.weight_tag.push_back(t.tag);
    auto lie_bracket = [&](int ti, int tj) {
        const auto& a = G.trees[ti];
        const auto& b = G.trees[tj];
        TensorPoly p = lie.bracket(lie.expand(a.b), lie.expand(b.b));
        int arity = a.arity + b.arity;
        ModElem out;
        for (auto& [bi, c] : lie.to_basis(p, arity)) {
            auto it = G.tree_index.find({arity, bi});
            if (it == G.tree_index.end())
                throw window_error("free_lr: bracket exceeds the weight bound");
            out.add_term(it->second, c * Elem::one());
        }
        return out;
    };
    for (int i = 0; i < (int)G.trees.size(); ++i)
        for (int j = i; j < (int)G.trees.size(); ++j) {
            if (G.trees[i].tag + G.trees[j].tag > K) continue;
            ModElem br = lie_bracket(i, j);
            if (!br.is_zero()) G.prov.table[{i, j}] = br;
        }
    return G;
}

/// free_lr: Hall-tree generators modulo rel2 rewriting (coefficients move out
/// emitting anchor terms; built into bracket evaluation) with the anchor
/// extended by Gamma[x,y] = [Gamma x, Gamma y] and the differential
/// transported through the Leibniz recursion; d^2 = 0 is checked.
/// `tags` are per-input-generator weights (defaults to 1) so bar-cobar can
/// truncate by total word weight.
/// Reorder the graded free LR pair by a lowering order for the given
/// differential and remap tables, anchors, and tags.
struct AssembledFreeLR {
    LRPtr pair;
    std::vector<int> newpos;  // tree index -> module generator index
};

inline AssembledFreeLR assemble_free_lr(const GradedFreeLR& G, const std::vector<ModElem>& diff,
                                        int K) {
    const AlgPtr& A = G.prov.base;
    auto mod = make_cell_ordered(A, G.gens, diff);
    std::vector<int> newpos(G.trees.size());
    for (size_t i = 0; i < G.trees.size(); ++i) newpos[i] = mod->gen_index(G.gens[i].name);
    auto remap = [&](const ModElem& m) {
        ModElem out;
        for (auto& [g, c] : m.terms) out.add_term(newpos[g], c);
        return out;
    };
    auto pair = std::make_shared<DGLRPair>();
    pair->base = A;
    pair->module = mod;
    pair->weight_cap = K;
    pair->weight_tag.resize(G.trees.size());
    pair->anchor.resize(G.trees.size(), Derivation::zero(A, 0));
    for (size_t i = 0; i < G.trees.size(); ++i) {
        pair->weight_tag[newpos[i]] = G.trees[i].tag;
        pair->anchor[newpos[i]] = G.anchors[i];
    }
    for (auto& [ij, v] : G.prov.table) {
        int a = newpos[ij.first], b = newpos[ij.second];
        ModElem w = remap(v);
        if (a <= b) {
            pair->table[{a, b}] = w;
        } else {
            int sg = (is_odd(mod->gen_degree(a)) && is_odd(mod->gen_degree(b))) ? -1 : 1;
            pair->table[{b, a}] = Rat(-sg) * w;
        }
    }
    return AssembledFreeLR{pair, newpos};
}

inline FreeLRPair free_lr(const AnchoredModule& input, int K, std::vector<int> tags = {}) {
    if (K < 1) throw argument_error("free_lr: weight bound must be >= 1");
    Report ac = input.check();
    if (!ac.ok()) throw argument_error("free_lr: input is not a dg anchored module");
    const ModPtr& M = input.module;
    const AlgPtr& A = M->base;
    int n = M->n_gens();
    if (tags.empty()) tags.assign(n, 1);

    GradedFreeLR G = free_graded_lr(A, M->gens, input.anchor, K, tags);
    FreeLie& lie = G.lie;
    const DGLRPair& prov = G.prov;

    // differential transported through the Leibniz recursion
    std::map<std::string, ModElem> d_cache;
    std::function<ModElem(const Word&)> d_word = [&](const Word& w) -> ModElem {
        std::string key;
        for (int a : w) key += std::to_string(a) + ",";
        auto it = d_cache.find(key);
        if (it != d_cache.end()) return it->second;
        ModElem out;
        if (w.size() == 1) {
            for (auto& [g, c] : M->diff[w[0]].terms) out.add_term(G.tree_index.at({1, g}), c);
        } else {
            auto [u, v] = FreeLie::standard_factorization(w);
            ModElem xu = ModElem::gen(tree_of_word(lie, G.tree_index, u));
            ModElem xv = ModElem::gen(tree_of_word(lie, G.tree_index, v));
            int sg = is_odd(lie.word_degree(u)) ? -1 : 1;
            out = prov.bracket(d_word(u), xv) + Rat(sg) * prov.bracket(xu, d_word(v));
        }
        d_cache.emplace(key, out);
        return out;
    };
    std::vector<ModElem> diff;
    for (auto& t : G.trees) {
        if (!t.b.square) {
            diff.push_back(d_word(t.b.word));
        } else {
            ModElem xl = ModElem::gen(tree_of_word(lie, G.tree_index, t.b.word));
            int sg = is_odd(lie.word_degree(t.b.word)) ? -1 : 1;
            diff.push_back(prov.bracket(d_word(t.b.word), xl) +
                           Rat(sg) * prov.bracket(xl, d_word(t.b.word)));
        }
    }

    auto asm_ = assemble_free_lr(G, diff, K);
    FreeLRPair out;
    out.pair = asm_.pair;
    out.input = input;
    out.weight_bound = K;
    out.lie = lie;
    out.tree_of.resize(G.trees.size());
    for (size_t i = 0; i < G.trees.size(); ++i) {
        out.tree_of[asm_.newpos[i]] = G.trees[i].b;
        out.per_weight[G.trees[i].tag].push_back(asm_.newpos[i]);
    }
    for (auto& [wt, v] : out.per_weight) std::sort(v.begin(), v.end());
    out.include = ModMorphism{M, asm_.pair->module, {}, 0};
    for (int i = 0; i < n; ++i)
        out.include.images.push_back(ModElem::gen(asm_.newpos[G.tree_index.at({1, i})]));
    return out;
}

inline int tree_of_word(const FreeLie& lie, const std::map<std::pair<int, int>, int>& tree_index,
                        const Word& w) {
    auto& bs = lie.basis((int)w.size());
    for (int bi = 0; bi < (int)bs.size(); ++bi)
        if (!bs[bi].square && bs[bi].word == w) {
            auto it = tree_index.find({(int)w.size(), bi});
            if (it == tree_index.end()) throw window_error("free_lr: tree beyond bound");
            return it->second;
        }
    throw argument_error("free_lr: word is not a basis tree");
}

/// LR(f) for an anchored-module morphism (f0, f), by the Eq. (LRmor)
/// recursion on tree structure, through total weight K.
inline LRMorphism free_lr_morphism(const FreeLRPair& src, const FreeLRPair& tgt,
                                   const AlgMorphism& f0, const ModMorphism& f) {
    const AlgPtr& A = src.pair->base;
    auto tgt_changed = base_change(f0, tgt.pair->module);

    // image of an input generator: push through f then include into the target pair
    auto include_target = [&](const ModElem& m) {
        // m lives over base_change(f0, tgt.input.module); re-express on weight-1 trees
        ModElem out;
        for (auto& [g, c] : m.terms) {
            const std::string& nm = f.target->gen_name(g);
            int tg = tgt.include.images[tgt.input.module->gen_index(nm)].terms.begin()->first;
            out.add_term(tg, c);
        }
        return out;
    };

    std::map<std::string, ModElem> cache;
    std::function<ModElem(const Word&)> img_word = [&](const Word& w) -> ModElem {
        std::string key;
        for (int a : w) key += std::to_string(a) + ",";
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        ModElem out;
        if (w.size() == 1) {
            out = include_target(f.images[w[0]]);
        } else {
            auto [u, v] = FreeLie::standard_factorization(w);
            out = lrmor_combine(src, tgt, f0, tgt_changed, img_word(u), img_word(v),
                                src_word_anchor(src, u), src_word_anchor(src, v),
                                src.lie.word_degree(u), src.lie.word_degree(v));
        }
        cache.emplace(key, out);
        return out;
    };

    ModMorphism fm{src.pair->module, tgt_changed, {}, 0};
    fm.images.resize(src.pair->module->n_gens());
    for (int i = 0; i < src.pair->module->n_gens(); ++i) {
        const auto& b = src.tree_of[i];
        if (!b.square) {
            fm.images[i] = img_word(b.word);
        } else {
            ModElem iw = img_word(b.word);
            Derivation aw = src_word_anchor(src, b.word);
            Deg dw = src.lie.word_degree(b.word);
            fm.images[i] = lrmor_combine(src, tgt, f0, tgt_changed, iw, iw, aw, aw, dw, dw);
        }
    }
    return LRMorphism{src.pair, tgt.pair, f0, fm};
}

inline Derivation src_word_anchor(const FreeLRPair& src, const Word& w) {
    if (w.size() == 1) return src.input.anchor[w[0]];
    auto [u, v] = FreeLie::standard_factorization(w);
    return der_bracket(src_word_anchor(src, u), src_word_anchor(src, v));
}

/// One Eq. (LRmor) step: the image of [x, y] from the images of x and y.
inline ModElem lrmor_combine(const FreeLRPair& src, const FreeLRPair& tgt, const AlgMorphism& f0,
                             const ModPtr& tgt_changed, const ModElem& fx, const ModElem& fy,
                             const Derivation& ax, const Derivation& ay, Deg dx, Deg dy) {
    const AlgPtr& A = src.pair->base;
    ModElem out;
    for (auto& [ga, ca] : fx.terms)
        for (auto& [ma, qa] : ca.terms)
            for (auto& [gb, cb] : fy.terms)
                for (auto& [mb, qb] : cb.terms) {
                    Deg dna = tgt.pair->module->gen_degree(ga);
                    Deg dcb = A->mono_degree(mb);
                    int s = (is_odd(dna) && is_odd(dcb)) ? -1 : 1;
                    Elem prod = A->mul(Elem{{{ma, Rat(1)}}}, Elem{{{mb, Rat(1)}}});
                    ModElem br = base_change_elem(f0, tgt.pair->bracket_gens(ga, gb));
                    out += (qa * qb * Rat(s)) * tgt_changed->scale(prod, br);
                }
    for (auto& [gb, cb] : fy.terms) {
        ModElem t;
        t.add_term(gb, ax.apply(cb));
        out += t;
    }
    int sxy = (is_odd(dx) && is_odd(dy)) ? -1 : 1;
    for (auto& [ga, ca] : fx.terms) {
        ModElem t;
        t.add_term(ga, ay.apply(ca));
        out -= Rat(sxy) * t;
    }
    return out;
}

}  // namespace shlr
