// Batch front-end: parse structure documents, dispatch to the engine, emit
// certification reports. Exit status: 0 all checks pass, 1 mathematical
// failure, 2 input error.

#include "shlr/document.hpp"
#include "shlr/rectify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

using namespace shlr;

namespace {

struct Options {
    std::string input;
    std::string output;
    std::string format = "json";
    int max_weight = 0;
    int degree_min = 1;  // sentinel: unset when min > max
    int degree_max = 0;
    int poly_degree_max = -1;
    unsigned long long seed = 0;
    bool have_seed = false;
};

Json load(const Options& o) {
    std::ifstream in(o.input);
    if (!in) throw argument_error("cannot open input file: " + o.input);
    Json doc;
    in >> doc;
    return doc;
}

Bounds effective_bounds(const Json& doc, const Options& o) {
    Bounds b = parse_bounds(doc);
    if (o.max_weight > 0) b.W = b.K = o.max_weight;
    if (o.degree_min <= o.degree_max)
        b.window = Window(o.degree_min, o.degree_max, b.window.poly_degree_max);
    if (o.poly_degree_max >= 0)
        b.window = Window(b.window.degree_min, b.window.degree_max, o.poly_degree_max);
    if (o.have_seed) b.seed = o.seed;
    return b;
}

void emit(const Json& out, const Options& o, double elapsed_ms) {
    if (o.format == "text") {
        if (out.contains("report")) {
            for (auto& it : out.at("report").at("checks")) {
                std::cout << it.at("verdict").get<std::string>() << "  "
                          << it.at("check").get<std::string>();
                if (it.contains("witness"))
                    std::cout << "  [" << it.at("witness").get<std::string>() << "]";
                std::cout << "\n";
            }
            std::cout << (out.at("report").at("pass").get<bool>() ? "PASS" : "FAIL") << "  ("
                      << elapsed_ms << " ms)\n";
        } else {
            std::cout << out.dump(2) << "\n";
        }
        return;
    }
    // machine-readable output is byte-stable: no timing inside
    std::string s = out.dump(2);
    if (!o.output.empty()) {
        std::ofstream f(o.output + ".tmp");
        f << s << "\n";
        f.close();
        std::rename((o.output + ".tmp").c_str(), o.output.c_str());
    } else {
        std::cout << s << "\n";
    }
}

int finish(const Report& r) { return r.ok() ? 0 : 1; }

int cmd_check(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    Report rep;
    rep.seed = b.seed;
    ParsedPair P = parse_pair(doc);
    if (P.lr) rep.merge(check_lr(*P.lr, b.seed), "lr");
    if (P.sh) {
        rep.merge(check_shlr(*P.sh, b.seed), "shlr");
        auto C = ce_complex(P.sh);
        rep.merge(C.check_d2(), "ce");
    }
    if (!P.lr && !P.sh) rep.merge(check_square_zero(*P.algebra), "cdga");
    Json out{{"report", report_json(rep)}, {"bounds", bounds_json(b)}};
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(rep);
}

int cmd_free_lr(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    ParsedPair P = parse_pair(doc);
    if (!P.lr) throw argument_error("free-lr expects module + anchor sections");
    AnchoredModule am{P.module, P.lr->anchor};
    auto F = free_lr(am, b.K);
    Report rep = check_lr(*F.pair, b.seed);
    Json out{{"report", report_json(rep)}, {"bounds", bounds_json(b)}, {"pair", lr_json(F.pair)}};
    Json weights = Json::object();
    for (auto& [w, v] : F.per_weight) {
        Json names = Json::array();
        for (int g : v) names.push_back(F.pair->module->gen_name(g));
        weights[std::to_string(w)] = names;
    }
    out["weights"] = weights;
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(rep);
}

int cmd_barcobar(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    ParsedPair P = parse_pair(doc);
    if (!P.sh) throw argument_error("barcobar expects a pair or sh_structure document");
    auto bc = bar_cobar(P.sh, b.K);
    Report rep = check_lr(*bc.pair, b.seed);
    rep.merge(check_linear_sh(bc.unit), "unit");
    rep.merge(check_unit_qiso(bc, b.window), "unit_qiso");
    Json out{
        {"report", report_json(rep)}, {"bounds", bounds_json(b)}, {"pair", lr_json(bc.pair)}};
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(rep);
}

int cmd_rectify(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    ParsedPair P = parse_pair(doc);
    if (!P.sh) throw argument_error("rectify expects a pair or sh_structure document");
    auto R = rectify(P.sh);
    Report rep = R.rect_ce->check_d2();
    rep.merge(check_general_sh(R.counit, b.window, true), "counit");
    Json out{{"report", report_json(rep)},
             {"bounds", bounds_json(b)},
             {"rectified", sh_json(R.rectified)},
             {"ce", ce_json(*R.rect_ce)}};
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(rep);
}

int cmd_cohomology(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    ParsedPair P = parse_pair(doc);
    auto V = truncate(P.module, b.window);
    auto H = V.C.cohomology();
    Report rep;
    rep.require(V.C.square_zero(), "square_zero", "");
    Json dims = Json::object();
    Json reps = Json::object();
    for (auto& [d, n] : H.dim) {
        dims[std::to_string(d)] = n;
        Json rr = Json::array();
        for (auto& v : H.reps[d]) rr.push_back(modelem_str(*P.module, V.element(d, v)));
        reps[std::to_string(d)] = rr;
    }
    Json unreliable = Json::array();
    for (Deg d : H.unreliable) unreliable.push_back(d);
    Json out{{"report", report_json(rep)},
             {"bounds", bounds_json(b)},
             {"dimensions", dims},
             {"representatives", reps},
             {"unreliable_degrees", unreliable}};
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(rep);
}

int cmd_bv(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    Presentation P = parse_presentation(doc);
    Deg depth = doc.value("depth", b.window.degree_min);
    auto bv = bv_resolve(P, depth, b.window, b.W);
    Json out{{"report", report_json(bv.certificate)},
             {"bounds", bounds_json(b)},
             {"bv_complex", ce_json(bv.bv)},
             {"pair", sh_json(bv.rep.structure)}};
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(bv.certificate);
}

int cmd_lift(const Options& o) {
    auto t0 = std::chrono::steady_clock::now();
    Json doc = load(o);
    Bounds b = effective_bounds(doc, o);
    ParsedPair P = parse_pair(doc);
    if (!P.sh) throw argument_error("lift expects a pair document");
    auto id = LinearSHMorphism::identity(P.sh);
    auto fac = factorize_fixed_base(id, b.window);
    Report rep = check_shlr(*fac.mbar);
    rep.merge(check_linear_sh(fac.project), "projection");
    Json out{
        {"report", report_json(rep)}, {"bounds", bounds_json(b)}, {"mbar", sh_json(fac.mbar)}};
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(out, o, ms);
    return finish(rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact certification engine for dg and strong-homotopy Lie-Rinehart pairs"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* c) {
        c->add_option("input", o.input, "input document (JSON)")->required();
        c->add_option("-o,--output", o.output, "output file (default stdout)");
        c->add_option("--format", o.format, "json|text")->check(CLI::IsMember({"json", "text"}));
        c->add_option("--max-weight", o.max_weight, "weight bound override");
        c->add_option("--degree-min", o.degree_min, "window degree minimum");
        c->add_option("--degree-max", o.degree_max, "window degree maximum");
        c->add_option("--poly-degree-max", o.poly_degree_max, "window polynomial degree bound");
        c->add_option("--seed", o.seed, "determinism seed")->each([&](const std::string&) {
            o.have_seed = true;
        });
    };

    std::map<std::string, std::function<int(const Options&)>> dispatch;
    std::vector<std::tuple<std::string, std::string, int (*)(const Options&)>> cmds{
        {"check", "run the structure checkers on a document", cmd_check},
        {"free-lr", "construct the free Lie-Rinehart pair", cmd_free_lr},
        {"barcobar", "bar-cobar resolution with unit certificates", cmd_barcobar},
        {"rectify", "rectified pair, counit, and certificates", cmd_rectify},
        {"lift", "cylinder factorization of the identity", cmd_lift},
        {"bv", "BV resolution of a presentation", cmd_bv},
        {"cohomology", "window cohomology of the module", cmd_cohomology}};
    for (auto& [name, desc, fn] : cmds) {
        auto* c = app.add_subcommand(name, desc);
        add_common(c);
        dispatch[name] = fn;
    }

    CLI11_PARSE(app, argc, argv);
    std::string sub = app.get_subcommands().front()->get_name();
    try {
        return dispatch[sub](o);
    } catch (const argument_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const window_error& e) {
        std::cerr << "window error: " << e.what() << "\n";
        return 1;
    } catch (const precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
