#include "shlr/free_lr.hpp"
#include "shlr/pullback.hpp"
#include "shlr/parser.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace shlr;

// archetype: (k[x], Der(k[x])) with the tautological anchor
static LRPtr archetype() {
    auto A = Algebra::make({{"x", 0}});
    auto M = CellModule::make(A, {{"e", 0}}, {});
    auto P = std::make_shared<DGLRPair>();
    P->base = A;
    P->module = M;
    P->anchor = {Derivation::partial(A, 0)};
    return P;
}

TEST_CASE("check_lr on the archetype and on broken pairs") {
    auto P = archetype();
    CHECK(check_lr(*P).ok());

    // bracket == 0 with anchor Gamma(e) = d/dx fails Leibniz: [e, xe] = e forced
    // (the Jacobi/Leibniz samples with coefficient x catch it)
    auto A = P->base;
    auto Q = std::make_shared<DGLRPair>(*P);
    // the archetype already has zero table; Leibniz holds because the
    // evaluator emits the anchor term. Break instead the anchor chain
    // compatibility with a nonzero bracket of wrong degree... simplest broken
    // pair: [e,e] = e is even-even so [e,e]=0 is forced; use two generators.
    auto M2 = CellModule::make(A, {{"e1", 0}, {"e2", 0}}, {});
    auto B = std::make_shared<DGLRPair>();
    B->base = A;
    B->module = M2;
    B->anchor = {Derivation::partial(A, 0), Derivation::partial(A, 0)};
    ModElem br = ModElem::gen(0);
    B->table[{0, 1}] = br;  // [e1,e2] = e1, but [Gamma e1, Gamma e2] = 0
    Report r = check_lr(*B);
    CHECK_FALSE(r.ok());

    // abelian pair passes
    auto C = std::make_shared<DGLRPair>();
    C->base = A;
    C->module = M2;
    C->anchor = {Derivation::zero(A, 0), Derivation::zero(A, 0)};
    CHECK(check_lr(*C).ok());
}

TEST_CASE("leibniz forces [e, xe] = e in the archetype") {
    auto P = archetype();
    ModElem e = ModElem::gen(0);
    ModElem xe = P->module->scale(P->base->gen_elem("x"), e);
    CHECK(P->bracket(e, xe) == e);
}

TEST_CASE("hall_basis counts") {
    std::vector<Gen> two_even{{"a", 0}, {"b", 0}};
    CHECK(hall_basis(two_even, 2).size() == 1);
    CHECK(hall_basis(two_even, 2)[0] == "[a,b]");
    CHECK(hall_basis(two_even, 4).size() == 3);
    std::vector<Gen> one_odd{{"a", -1}};
    auto h2 = hall_basis(one_odd, 2);
    REQUIRE(h2.size() == 1);
    CHECK(h2[0] == "[a,a]");
}

TEST_CASE("free_lr with trivial anchor matches Witt dimensions") {
    auto A = Algebra::make({{"x", 0}});
    auto M = CellModule::make(A, {{"u", 0}, {"v", 0}}, {});
    AnchoredModule am{M, {Derivation::zero(A, 0), Derivation::zero(A, 0)}};
    auto F = free_lr(am, 4);
    CHECK(F.per_weight[1].size() == 2);
    CHECK(F.per_weight[2].size() == 1);
    CHECK(F.per_weight[3].size() == 2);
    CHECK(F.per_weight[4].size() == 3);
    CHECK(check_lr(*F.pair).ok());
}

TEST_CASE("free_lr with anchor: normal form emits anchor terms") {
    auto A = Algebra::make({{"x", 0}});
    auto M = CellModule::make(A, {{"e", 0}}, {});
    AnchoredModule am{M, {Derivation::partial(A, 0)}};
    auto F = free_lr(am, 2);
    // K=2 on one even generator: [e,e] = 0, so only the weight-1 tree
    CHECK(F.per_weight[1].size() == 1);
    CHECK(F.per_weight[2].size() == 0);
    // normal form: [e, x e] = e
    int e = F.include.images[0].terms.begin()->first;
    ModElem xe = F.pair->module->scale(A->gen_elem("x"), ModElem::gen(e));
    CHECK(F.pair->bracket(ModElem::gen(e), xe) == ModElem::gen(e));
    CHECK(check_lr(*F.pair).ok());
    // K=1 returns M itself
    auto F1 = free_lr(am, 1);
    CHECK(F1.pair->module->n_gens() == 1);
}

TEST_CASE("free_lr transports the differential and checks d^2") {
    // M = A<e0, eps>, d eps = x e0, trivial anchor
    auto A = Algebra::make({{"x", 0}});
    ModElem de;
    de.add_term(0, A->gen_elem("x"));
    auto M = CellModule::make(A, {{"e0", 0}, {"eps", -1}}, {ModElem(), de});
    AnchoredModule am{M, {Derivation::zero(A, 0), Derivation::zero(A, -1)}};
    auto F = free_lr(am, 3);
    CHECK(check_lr(*F.pair).ok());
    // include is a chain map
    CHECK(F.include.check_chain_map().ok());
}

TEST_CASE("free_lr_morphism: identity, zero, scaling") {
    auto A = Algebra::make({{"x", 0}});
    auto M = CellModule::make(A, {{"u", 0}, {"v", 0}}, {});
    AnchoredModule am{M, {Derivation::zero(A, 0), Derivation::zero(A, 0)}};
    auto F = free_lr(am, 3);
    auto id0 = AlgMorphism::identity(A);
    // identity
    ModMorphism idm{M, base_change(id0, M), {ModElem::gen(0), ModElem::gen(1)}, 0};
    auto phi = free_lr_morphism(F, F, id0, idm);
    for (int i = 0; i < F.pair->module->n_gens(); ++i)
        CHECK(phi.f.images[i] == ModElem::gen(i));
    CHECK(check_lr_morphism(phi).ok());
    // scaling u -> 2u, v -> 2v: weight-k trees scale by 2^k
    ModMorphism sc{M, base_change(id0, M),
                   {Rat(2) * ModElem::gen(0), Rat(2) * ModElem::gen(1)}, 0};
    auto psi = free_lr_morphism(F, F, id0, sc);
    for (int i = 0; i < F.pair->module->n_gens(); ++i) {
        int w = F.pair->weight_tag[i];
        Rat expect = 1;
        for (int t = 0; t < w; ++t) expect *= 2;
        CHECK(psi.f.images[i] == expect * ModElem::gen(i));
    }
    CHECK(check_lr_morphism(psi).ok());
}

TEST_CASE("pullback along the identity is isomorphic to P") {
    auto P = archetype();
    auto id0 = AlgMorphism::identity(P->base);
    auto pb = pullback(id0, P, Window(-3, 1, 4));
    CHECK(pb.pair->module->n_gens() == P->module->n_gens());
    CHECK(check_lr(*pb.pair).ok());
    CHECK(check_lr_morphism(pb.proj).ok());
}

TEST_CASE("pullback with surjective anchor splits as Der + Ker") {
    // P = (k[x], A<e, f>) with Gamma(e) = d/dx, Gamma(f) = 0, brackets 0:
    // need [Gamma e, Gamma f]=0 ok. Pull back along f0 : k[x] -> k[x,y].
    auto A = Algebra::make({{"x", 0}});
    auto B = Algebra::make({{"x", 0}, {"y", 0}});
    auto M = CellModule::make(A, {{"e", 0}, {"f", 0}}, {});
    auto P = std::make_shared<DGLRPair>();
    P->base = A;
    P->module = M;
    P->anchor = {Derivation::partial(A, 0), Derivation::zero(A, 0)};
    REQUIRE(check_lr(*P).ok());
    AlgMorphism f0{A, B, {B->gen_elem("x")}};
    auto pb = pullback(f0, P, Window(-3, 1, 4));
    // expected split: Der(k[x,y]) has rank 2, Ker(Gamma) (x) B has rank 1
    CHECK(pb.pair->module->n_gens() == 3);
    CHECK(check_lr(*pb.pair).ok());
    CHECK(check_lr_morphism(pb.proj).ok());
}

TEST_CASE("pullback with zero anchor uses the Der leg") {
    // anchor == 0, f0 = id: Der(B) -> Der(A,B) is the identity, surjective;
    // the Der-kernel part vanishes, so the module is B (x) M
    auto A = Algebra::make({{"x", 0}});
    auto M = CellModule::make(A, {{"m", -1}}, {});
    auto P = std::make_shared<DGLRPair>();
    P->base = A;
    P->module = M;
    P->anchor = {Derivation::zero(A, -1)};
    auto id0 = AlgMorphism::identity(A);
    auto pb = pullback(id0, P, Window(-3, 1, 4));
    CHECK(pb.pair->module->n_gens() == 1);  // Ker(Der leg) = 0, B (x) M rank 1
    CHECK(check_lr(*pb.pair).ok());
    CHECK(check_lr_morphism(pb.proj).ok());
}

TEST_CASE("factor_through_pullback recovers the morphism") {
    // phi : (B, M) -> (A, N) over f0 : A -> B with fixed-base = Id case first
    auto P = archetype();
    auto id0 = AlgMorphism::identity(P->base);
    auto pb = pullback(id0, P, Window(-3, 1, 4));
    auto phi = LRMorphism::identity(P);
    auto fbar = factor_through_pullback(phi, pb);
    CHECK(check_lr_morphism(fbar).ok());
    // recomposition: (f0, p) o (Id, fbar) = (f0, f) exactly
    auto comp = pb.proj.compose(fbar);
    for (int i = 0; i < P->module->n_gens(); ++i) CHECK(comp.f.images[i] == phi.f.images[i]);
    // phi = pullback projection itself gives fbar = identity
    auto fbar2 = factor_through_pullback(pb.proj, pb);
    for (int i = 0; i < pb.pair->module->n_gens(); ++i)
        CHECK(fbar2.f.images[i] == ModElem::gen(i));
}
