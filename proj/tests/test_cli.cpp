#include "shlr/document.hpp"
#include "shlr/rectify.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace shlr;

static std::string write_doc(const std::string& name, const Json& j) {
    std::string path = "cli_" + name + ".json";
    std::ofstream f(path);
    f << j.dump(2) << "\n";
    return path;
}

static Json archetype_doc() {
    return Json{
        {"algebra", {{"generators", Json::array({{{"name", "x"}, {"degree", 0}}})}}},
        {"module", {{"generators", Json::array({{{"name", "e"}, {"degree", 0}}})}}},
        {"anchor", {{"e", {{"x", "1"}}}}},
        {"bounds",
         {{"W", 3}, {"K", 3}, {"degree_min", -3}, {"degree_max", 0}, {"poly_degree_max", 4},
          {"seed", 0}}}};
}

static int run(const std::string& cmd) {
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

TEST_CASE("document parse and round trip") {
    Json doc = archetype_doc();
    ParsedPair P = parse_pair(doc);
    REQUIRE(P.lr);
    CHECK(check_lr(*P.lr).ok());
    // emitted pair document re-parses to the same tables
    Json out = lr_json(P.lr);
    out["bounds"] = doc["bounds"];
    ParsedPair P2 = parse_pair(out);
    CHECK(P2.lr->table == P.lr->table);
    for (int i = 0; i < P.module->n_gens(); ++i)
        CHECK(P2.lr->anchor[i].images == P.lr->anchor[i].images);
}

TEST_CASE("sh_structure documents round trip") {
    Json doc = archetype_doc();
    ParsedPair P = parse_pair(doc);
    Json out = sh_json(P.sh);
    out["bounds"] = doc["bounds"];
    ParsedPair P2 = parse_pair(out);
    REQUIRE(P2.sh);
    CHECK(P2.sh->Dtab == P.sh->Dtab);
    CHECK(check_shlr(*P2.sh).ok());
}

TEST_CASE("cli exit codes") {
    std::string good = write_doc("good", archetype_doc());
    CHECK(run("./shlr check " + good + " > cli_good.out") == 0);

    // perturbed Jacobi: sl2 with a broken bracket
    Json bad{{"algebra", {{"generators", Json::array()}}},
             {"module",
              {{"generators",
                Json::array({{{"name", "h"}, {"degree", 0}},
                             {{"name", "e"}, {"degree", 0}},
                             {{"name", "f"}, {"degree", 0}}})}}},
             {"brackets", {{"h,e", "2*e"}, {"h,f", "-2*f"}, {"e,f", "h + e"}}},
             {"bounds", {{"W", 3}, {"degree_min", -2}, {"degree_max", 0},
                         {"poly_degree_max", 3}, {"seed", 0}}}};
    std::string badp = write_doc("bad", bad);
    CHECK(run("./shlr check " + badp + " > cli_bad.out") == 1);
    // the report carries a witness
    std::ifstream f("cli_bad.out");
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str().find("witness") != std::string::npos);

    // malformed degree -> exit 2
    Json malformed = archetype_doc();
    malformed["module"]["generators"][0]["degree"] = "zero";
    std::string malp = write_doc("malformed", malformed);
    CHECK(run("./shlr check " + malp + " 2> cli_mal.err") == 2);

    CHECK(run("./shlr check no_such_file.json 2> cli_nf.err") == 2);
}

TEST_CASE("cli free-lr and round trip through check") {
    Json doc{{"algebra", {{"generators", Json::array({{{"name", "x"}, {"degree", 0}}})}}},
             {"module",
              {{"generators", Json::array({{{"name", "u"}, {"degree", 0}},
                                           {{"name", "v"}, {"degree", 0}}})}}},
             {"anchor", Json::object()},
             {"bounds", {{"W", 3}, {"K", 3}, {"degree_min", -3}, {"degree_max", 0},
                         {"poly_degree_max", 3}, {"seed", 0}}}};
    std::string p = write_doc("freelr", doc);
    CHECK(run("./shlr free-lr " + p + " -o cli_freelr.out") == 0);
    Json out;
    std::ifstream f("cli_freelr.out");
    f >> out;
    // the emitted pair is a valid input for check
    Json again = out.at("pair");
    again["bounds"] = doc["bounds"];
    std::string p2 = write_doc("freelr2", again);
    CHECK(run("./shlr check " + p2 + " > cli_freelr2.out") == 0);
    CHECK(out.at("weights").at("2").size() == 1);
}

TEST_CASE("cli determinism: byte-identical reruns") {
    std::string p = write_doc("det", archetype_doc());
    REQUIRE(run("./shlr barcobar " + p + " -o cli_det1.out --seed 7") == 0);
    REQUIRE(run("./shlr barcobar " + p + " -o cli_det2.out --seed 7") == 0);
    std::ifstream a("cli_det1.out"), b("cli_det2.out");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().size() > 100);
}

TEST_CASE("cli cohomology of the Koszul module") {
    Json doc{{"algebra", {{"generators", Json::array({{{"name", "x"}, {"degree", 0}}})}}},
             {"module",
              {{"generators", Json::array({{{"name", "e0"}, {"degree", 0}},
                                           {{"name", "eps"}, {"degree", -1}}})},
               {"differential", {{"eps", "x*e0"}}}}},
             {"bounds", {{"W", 2}, {"degree_min", -1}, {"degree_max", 0},
                         {"poly_degree_max", 4}, {"seed", 0}}}};
    std::string p = write_doc("koszul", doc);
    REQUIRE(run("./shlr cohomology " + p + " -o cli_koszul.out") == 0);
    Json out;
    std::ifstream f("cli_koszul.out");
    f >> out;
    CHECK(out.at("dimensions").at("0").get<int>() == 1);
    CHECK(out.at("dimensions").at("-1").get<int>() == 0);
}

TEST_CASE("cli bv on the toy presentation") {
    Json doc{{"presentation",
              {{"variables", Json::array({"x", "y"})},
               {"ideal", Json::array({"x*y"})},
               {"distribution", Json::array({Json{{"x", "x"}, {"y", "-y"}}})}}},
             {"depth", -3},
             {"bounds", {{"W", 3}, {"degree_min", -3}, {"degree_max", 0},
                         {"poly_degree_max", 5}, {"seed", 0}}}};
    std::string p = write_doc("bv", doc);
    CHECK(run("./shlr bv " + p + " -o cli_bv.out") == 0);
    Json out;
    std::ifstream f("cli_bv.out");
    f >> out;
    CHECK(out.at("report").at("pass").get<bool>());
    CHECK(out.at("bv_complex").at("differential").contains("af1"));
}
