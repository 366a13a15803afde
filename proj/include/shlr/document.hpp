#pragma once

#include "shlr/bv.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace shlr {

using Json = nlohmann::json;

struct Bounds {
    int W = 3;
    int K = 3;
    Window window{-4, 0, 4};
    unsigned long long seed = 0;
};

inline Bounds parse_bounds(const Json& doc) {
    Bounds b;
    if (!doc.contains("bounds")) return b;
    const Json& j = doc.at("bounds");
    if (j.contains("W")) b.W = j.at("W").get<int>();
    if (j.contains("K")) b.K = j.at("K").get<int>();
    Deg lo = j.value("degree_min", -4);
    Deg hi = j.value("degree_max", 0);
    int pm = j.value("poly_degree_max", 4);
    b.window = Window(lo, hi, pm);
    b.seed = j.value("seed", 0ULL);
    return b;
}

inline Json bounds_json(const Bounds& b) {
    return Json{{"W", b.W},
                {"K", b.K},
                {"degree_min", b.window.degree_min},
                {"degree_max", b.window.degree_max},
                {"poly_degree_max", b.window.poly_degree_max},
                {"seed", b.seed}};
}

/// Element of a free module presented over base + module generators:
/// each monomial must contain exactly one module generator, linearly.
inline ModElem parse_modelem(const AlgPtr& A, const ModPtr& M, const std::string& s) {
    std::vector<Gen> gens = A->gens;
    for (auto& g : M->gens) gens.push_back(g);
    auto mix = Algebra::make(gens, {});
    Elem e = parse_elem(*mix, s);
    int n_base = A->n_gens();
    ModElem out;
    for (auto& [m, c] : e.terms) {
        Monomial coeff;
        int gen = -1;
        for (auto& [g, ex] : m.factors) {
            if (g < n_base) {
                coeff.factors.push_back({g, ex});
            } else {
                if (gen >= 0 || ex != 1)
                    throw argument_error("module element is not linear in the generators: " + s);
                gen = g - n_base;
            }
        }
        if (gen < 0) throw argument_error("term without a module generator: " + s);
        // sign: the module generator was moved to the right across nothing
        // (coefficients are left of the generator already in normal form)
        out.add_term(gen, c * Elem{{{coeff, Rat(1)}}});
    }
    return out;
}

struct ParsedPair {
    AlgPtr algebra;
    ModPtr module;
    LRPtr lr;      // set when brackets/anchor present
    SHPtr sh;      // set when sh_structure present (or decalage of lr)
    Bounds bounds;
};

inline AlgPtr parse_algebra(const Json& doc) {
    if (!doc.contains("algebra")) throw argument_error("document has no 'algebra' section");
    const Json& j = doc.at("algebra");
    std::vector<Gen> gens;
    for (auto& g : j.at("generators"))
        gens.push_back({g.at("name").get<std::string>(), g.at("degree").get<int>()});
    auto pre = Algebra::make(gens, {});
    std::map<std::string, Elem> diff;
    if (j.contains("differential"))
        for (auto& [k, v] : j.at("differential").items())
            diff[k] = parse_elem(*pre, v.get<std::string>());
    AlgPtr A = Algebra::make(gens, diff);
    if (doc.contains("quotient")) {
        std::vector<Elem> ideal;
        for (auto& f : doc.at("quotient").at("ideal"))
            ideal.push_back(parse_elem(*A, f.get<std::string>()));
        Bounds b = parse_bounds(doc);
        A = quotient_window(A, ideal, b.window.poly_degree_max);
    }
    return A;
}

inline ParsedPair parse_pair(const Json& doc) {
    ParsedPair P;
    P.bounds = parse_bounds(doc);
    P.algebra = parse_algebra(doc);
    if (!doc.contains("module")) throw argument_error("document has no 'module' section");
    const Json& jm = doc.at("module");
    std::vector<Gen> mg;
    for (auto& g : jm.at("generators"))
        mg.push_back({g.at("name").get<std::string>(), g.at("degree").get<int>()});
    auto pre = CellModule::make(P.algebra, mg, {});
    std::vector<ModElem> diff(mg.size());
    if (jm.contains("differential"))
        for (auto& [k, v] : jm.at("differential").items())
            diff[pre->gen_index(k)] = parse_modelem(P.algebra, pre, v.get<std::string>());
    P.module = CellModule::make(P.algebra, mg, diff);

    bool has_lr = doc.contains("anchor") || doc.contains("brackets");
    if (has_lr) {
        auto lr = std::make_shared<DGLRPair>();
        lr->base = P.algebra;
        lr->module = P.module;
        lr->anchor.assign(P.module->n_gens(), Derivation::zero(P.algebra, 0));
        for (int i = 0; i < P.module->n_gens(); ++i)
            lr->anchor[i].degree = P.module->gen_degree(i);
        if (doc.contains("anchor"))
            for (auto& [mg2, imgs] : doc.at("anchor").items()) {
                int i = P.module->gen_index(mg2);
                for (auto& [ag, expr] : imgs.items())
                    lr->anchor[i].images[P.algebra->gen_index(ag)] =
                        parse_elem(*P.algebra, expr.get<std::string>());
            }
        if (doc.contains("brackets"))
            for (auto& [pairkey, expr] : doc.at("brackets").items()) {
                // split at the top-level comma (tree names contain commas)
                size_t comma = std::string::npos;
                int depth = 0;
                for (size_t ci = 0; ci < pairkey.size(); ++ci) {
                    if (pairkey[ci] == '[') ++depth;
                    if (pairkey[ci] == ']') --depth;
                    if (pairkey[ci] == ',' && depth == 0) {
                        comma = ci;
                        break;
                    }
                }
                if (comma == std::string::npos)
                    throw argument_error("bracket key must be 'g,h': " + pairkey);
                int i = P.module->gen_index(pairkey.substr(0, comma));
                int j = P.module->gen_index(pairkey.substr(comma + 1));
                ModElem v = parse_modelem(P.algebra, P.module, expr.get<std::string>());
                if (i <= j) {
                    lr->table[{i, j}] = v;
                } else {
                    int s = (is_odd(P.module->gen_degree(i)) && is_odd(P.module->gen_degree(j)))
                                ? -1
                                : 1;
                    lr->table[{j, i}] = Rat(-s) * v;
                }
            }
        P.lr = lr;
        P.sh = std::make_shared<SHLRStructure>(decalage(*lr));
    }
    if (doc.contains("sh_structure")) {
        auto sh = std::make_shared<SHLRStructure>();
        sh->base = P.algebra;
        sh->module = P.module;
        sh->W = P.bounds.W;
        const Json& js = doc.at("sh_structure");
        sh->higher_vanish = js.value("higher_vanish", false);
        if (js.contains("W")) sh->W = js.at("W").get<int>();
        auto parse_tuple = [&](const std::string& key) {
            std::vector<int> t;
            std::stringstream ss(key);
            std::string item;
            while (std::getline(ss, item, ',')) t.push_back(P.module->gen_index(item));
            return t;
        };
        if (js.contains("D"))
            for (auto& [wk, tab] : js.at("D").items()) {
                int k = std::stoi(wk);
                for (auto& [tkey, expr] : tab.items())
                    sh->set_D(k, parse_tuple(tkey),
                              parse_modelem(P.algebra, P.module, expr.get<std::string>()));
            }
        if (js.contains("rho"))
            for (auto& [wk, tab] : js.at("rho").items()) {
                int k = std::stoi(wk);
                for (auto& [tkey, imgs] : tab.items()) {
                    auto t = parse_tuple(tkey);
                    Deg deg = 1;
                    for (int g : t) deg += P.module->gen_degree(g);
                    Derivation u = Derivation::zero(P.algebra, deg);
                    for (auto& [ag, expr] : imgs.items())
                        u.images[P.algebra->gen_index(ag)] =
                            parse_elem(*P.algebra, expr.get<std::string>());
                    sh->set_rho(k, t, u);
                }
            }
        P.sh = sh;
    }
    return P;
}

inline Json algebra_json(const AlgPtr& A) {
    Json gens = Json::array();
    Json diff = Json::object();
    for (int i = 0; i < A->n_gens(); ++i) {
        gens.push_back({{"name", A->gen_name(i)}, {"degree", A->gen_degree(i)}});
        if (!A->diff[i].is_zero()) diff[A->gen_name(i)] = A->str(A->diff[i]);
    }
    Json out{{"generators", gens}};
    if (!diff.empty()) out["differential"] = diff;
    return out;
}

inline std::string modelem_str(const CellModule& M, const ModElem& m) {
    if (m.is_zero()) return "0";
    std::string s;
    for (auto& [g, c] : m.terms) {
        if (!s.empty()) s += " + ";
        s += "(" + M.base->str(c) + ")*" + M.gen_name(g);
    }
    return s;
}

inline Json module_json(const ModPtr& M) {
    Json gens = Json::array();
    Json diff = Json::object();
    for (int i = 0; i < M->n_gens(); ++i) {
        gens.push_back({{"name", M->gen_name(i)}, {"degree", M->gen_degree(i)}});
        if (!M->diff[i].is_zero()) diff[M->gen_name(i)] = modelem_str(*M, M->diff[i]);
    }
    Json out{{"generators", gens}};
    if (!diff.empty()) out["differential"] = diff;
    return out;
}

inline Json lr_json(const LRPtr& P) {
    Json out;
    out["algebra"] = algebra_json(P->base);
    out["module"] = module_json(P->module);
    Json anchor = Json::object();
    for (int i = 0; i < P->module->n_gens(); ++i) {
        if (P->anchor[i].is_zero()) continue;
        Json imgs = Json::object();
        for (int a = 0; a < P->base->n_gens(); ++a)
            if (!P->anchor[i].images[a].is_zero())
                imgs[P->base->gen_name(a)] = P->base->str(P->anchor[i].images[a]);
        anchor[P->module->gen_name(i)] = imgs;
    }
    if (!anchor.empty()) out["anchor"] = anchor;
    Json br = Json::object();
    for (auto& [ij, v] : P->table)
        if (!v.is_zero())
            br[P->module->gen_name(ij.first) + "," + P->module->gen_name(ij.second)] =
                modelem_str(*P->module, v);
    if (!br.empty()) out["brackets"] = br;
    return out;
}

inline Json sh_json(const SHPtr& S) {
    Json out;
    out["algebra"] = algebra_json(S->base);
    out["module"] = module_json(S->module);
    Json js;
    js["W"] = S->W;
    js["higher_vanish"] = S->higher_vanish;
    Json D = Json::object();
    for (auto& [k, tab] : S->Dtab) {
        Json t = Json::object();
        for (auto& [tuple, v] : tab) {
            if (v.is_zero()) continue;
            std::string key;
            for (size_t i = 0; i < tuple.size(); ++i)
                key += (i ? "," : "") + S->module->gen_name(tuple[i]);
            t[key] = modelem_str(*S->module, v);
        }
        if (!t.empty()) D[std::to_string(k)] = t;
    }
    if (!D.empty()) js["D"] = D;
    Json rho = Json::object();
    for (auto& [k, tab] : S->rhotab) {
        Json t = Json::object();
        for (auto& [tuple, u] : tab) {
            if (u.is_zero()) continue;
            std::string key;
            for (size_t i = 0; i < tuple.size(); ++i)
                key += (i ? "," : "") + S->module->gen_name(tuple[i]);
            Json imgs = Json::object();
            for (int a = 0; a < S->base->n_gens(); ++a)
                if (!u.images[a].is_zero()) imgs[S->base->gen_name(a)] = S->base->str(u.images[a]);
            t[key] = imgs;
        }
        if (!t.empty()) rho[std::to_string(k)] = t;
    }
    if (!rho.empty()) js["rho"] = rho;
    out["sh_structure"] = js;
    return out;
}

inline Json report_json(const Report& r) {
    Json items = Json::array();
    for (auto& it : r.items) {
        Json j{{"check", it.check}, {"verdict", verdict_str(it.verdict)}};
        if (!it.witness.empty()) j["witness"] = it.witness;
        items.push_back(j);
    }
    return Json{{"checks", items},
                {"pass", r.ok()},
                {"bounds", r.bounds},
                {"seed", r.seed}};
}

inline Presentation parse_presentation(const Json& doc) {
    if (!doc.contains("presentation")) throw argument_error("document has no 'presentation'");
    const Json& j = doc.at("presentation");
    std::vector<Gen> gens;
    for (auto& v : j.at("variables")) gens.push_back({v.get<std::string>(), 0});
    auto amb = Algebra::make(gens, {});
    Presentation P;
    P.ambient = amb;
    if (j.contains("ideal"))
        for (auto& f : j.at("ideal")) P.ideal.push_back(parse_elem(*amb, f.get<std::string>()));
    if (j.contains("distribution"))
        for (auto& field : j.at("distribution")) {
            Derivation u = Derivation::zero(amb, 0);
            for (auto& [var, expr] : field.items())
                u.images[amb->gen_index(var)] = parse_elem(*amb, expr.get<std::string>());
            P.distribution.push_back(u);
        }
    return P;
}

inline Json ce_json(const TruncatedCE& C) {
    Json gens = Json::array();
    Json diff = Json::object();
    for (int i = 0; i < C.ce->n_gens(); ++i) {
        gens.push_back({{"name", C.ce->gen_name(i)}, {"degree", C.ce->gen_degree(i)}});
        if (!C.Qimg[i].is_zero()) diff[C.ce->gen_name(i)] = C.ce->str(C.Qimg[i]);
    }
    return Json{{"generators", gens}, {"differential", diff}, {"weight_bound", C.W}};
}

}  // namespace shlr
