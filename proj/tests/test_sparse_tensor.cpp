#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "pidlft/model.hpp"
#include "pidlft/sparse_tensor.hpp"

using namespace pidlft;
using test_helpers::entry_multiset;
using test_helpers::random_tensor;

TEST_CASE("load_coo infers shape from max indices") {
    std::istringstream in("0,0,0,1.5\n1,0,1,2.0\n");
    const SparseTensor t = load_coo(in);
    CHECK(t.size() == 2);
    CHECK(t.shape() == TensorShape{2, 1, 2});
    CHECK(t.entries()[0] == Entry{0, 0, 0, 1.5});
    CHECK(t.entries()[1] == Entry{1, 0, 1, 2.0});
}

TEST_CASE("load_coo skips a header line") {
    std::istringstream in("i,j,k,value\n0,0,0,1.5\n");
    CHECK(load_coo(in).size() == 1);
}

TEST_CASE("load_coo rejects empty input") {
    std::istringstream in("");
    CHECK_THROWS_WITH_AS(load_coo(in), "load_coo: no entries", std::runtime_error);
}

TEST_CASE("load_coo rejects duplicate triples") {
    std::istringstream in("0,0,0,1.0\n0,0,0,1.0\n");
    CHECK_THROWS_AS(load_coo(in), std::invalid_argument);
}

TEST_CASE("load_coo reports the malformed line number") {
    std::istringstream in("0,0,0,1.0\n1,0,oops,2.0\n");
    try {
        load_coo(in);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_coo enforces a shape hint") {
    std::istringstream in("0,0,0,1.0\n3,0,0,2.0\n");
    CHECK_THROWS_AS(load_coo(in, TensorShape{2, 1, 1}), std::out_of_range);
}

TEST_CASE("load_coo rejects non-finite values") {
    std::istringstream in("0,0,0,nan\n");
    CHECK_THROWS_AS(load_coo(in), std::invalid_argument);
    std::istringstream in2("0,0,0,1e999\n");
    CHECK_THROWS_AS(load_coo(in2), std::invalid_argument);
}

TEST_CASE("save/load round-trips entries, order and shape") {
    // Shape deliberately larger than the occupied box.
    const SparseTensor t = random_tensor(TensorShape{6, 5, 9}, 20, 11);
    std::stringstream buf;
    save_coo(t, buf);
    const SparseTensor back = load_coo(buf);
    CHECK(back.shape() == t.shape());
    REQUIRE(back.size() == t.size());
    for (std::size_t n = 0; n < t.size(); ++n) {
        CHECK(back.entries()[n] == t.entries()[n]);
    }
}

TEST_CASE("density closed forms") {
    std::vector<Entry> four = {{0, 0, 0, 1}, {0, 0, 1, 2}, {1, 1, 0, 3}, {1, 0, 1, 4}};
    CHECK(density(SparseTensor(TensorShape{2, 2, 2}, four)) == 0.5);
    CHECK(density(SparseTensor(TensorShape{1, 1, 1}, {{0, 0, 0, 7.0}})) == 1.0);
}

TEST_CASE("split sizes follow the floor rule with remainder to test") {
    const SparseTensor ten = random_tensor(TensorShape{4, 4, 4}, 10, 1);
    const SplitResult a = split(ten, SplitRatios{2, 2, 6}, 7);
    CHECK(a.train.size() == 2);
    CHECK(a.val.size() == 2);
    CHECK(a.test.size() == 6);

    const SparseTensor eleven = random_tensor(TensorShape{4, 4, 4}, 11, 2);
    const SplitResult b = split(eleven, SplitRatios{2, 2, 6}, 7);
    CHECK(b.train.size() == 2);
    CHECK(b.val.size() == 2);
    CHECK(b.test.size() == 7);
}

TEST_CASE("split is a deterministic exact partition") {
    for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
        const SparseTensor t = random_tensor(TensorShape{5, 6, 7}, 40, seed + 100);
        const SplitResult r1 = split(t, SplitRatios{2, 2, 6}, seed);
        const SplitResult r2 = split(t, SplitRatios{2, 2, 6}, seed);

        // Identical under the same seed.
        CHECK(entry_multiset(r1.train) == entry_multiset(r2.train));
        CHECK(entry_multiset(r1.val) == entry_multiset(r2.val));
        CHECK(entry_multiset(r1.test) == entry_multiset(r2.test));

        // Parts are disjoint and their union restores the input.
        auto all = entry_multiset(r1.train);
        const auto val = entry_multiset(r1.val);
        const auto test = entry_multiset(r1.test);
        all.insert(val.begin(), val.end());
        all.insert(test.begin(), test.end());
        CHECK(all == entry_multiset(t));
        CHECK(r1.train.size() + r1.val.size() + r1.test.size() == t.size());

        // All parts keep the parent shape.
        CHECK(r1.train.shape() == t.shape());
        CHECK(r1.test.shape() == t.shape());
    }
}

TEST_CASE("split rejects bad ratios and tiny inputs") {
    const SparseTensor t = random_tensor(TensorShape{3, 3, 3}, 10, 5);
    CHECK_THROWS_AS(split(t, SplitRatios{0, 2, 6}, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(t, SplitRatios{2, -1, 6}, 1), std::invalid_argument);
    const SparseTensor two =
        SparseTensor(TensorShape{2, 1, 1}, {{0, 0, 0, 1.0}, {1, 0, 0, 2.0}});
    CHECK_THROWS_AS(split(two, SplitRatios{1, 1, 1}, 1), std::invalid_argument);
}

TEST_CASE("synth_lowrank at zero noise and full density reproduces the generator") {
    Model truth(TensorShape{1, 1, 1}, 1);
    const SparseTensor t = synth_lowrank(TensorShape{4, 3, 5}, 2, 1.0, 0.0, 9, &truth);
    CHECK(t.size() == 4 * 3 * 5);
    for (const Entry& e : t.entries()) {
        CHECK(e.value == truth.predict(e.i, e.j, e.k));
    }
}

TEST_CASE("synth_lowrank entry count follows the floor rule") {
    const SparseTensor t = synth_lowrank(TensorShape{5, 4, 6}, 3, 0.3, 0.0, 1);
    CHECK(t.size() == 36);  // floor(0.3 * 120)
    CHECK(density(t) == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("synth_lowrank is deterministic in the seed") {
    const SparseTensor t1 = synth_lowrank(TensorShape{6, 5, 7}, 3, 0.4, 0.05, 42);
    const SparseTensor t2 = synth_lowrank(TensorShape{6, 5, 7}, 3, 0.4, 0.05, 42);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t n = 0; n < t1.size(); ++n) {
        CHECK(t1.entries()[n] == t2.entries()[n]);
    }
}

TEST_CASE("synth_lowrank validates density") {
    CHECK_THROWS_AS(synth_lowrank(TensorShape{3, 3, 3}, 2, 0.0, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(synth_lowrank(TensorShape{3, 3, 3}, 2, 1.5, 0.0, 1), std::invalid_argument);
    // density * cells < 1
    CHECK_THROWS_AS(synth_lowrank(TensorShape{3, 3, 3}, 2, 0.01, 0.0, 1), std::invalid_argument);
}

TEST_CASE("tensor invariants are enforced at construction") {
    CHECK_THROWS_AS(SparseTensor(TensorShape{0, 1, 1}, {{0, 0, 0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(SparseTensor(TensorShape{2, 2, 2}, {}), std::invalid_argument);
    CHECK_THROWS_AS(SparseTensor(TensorShape{2, 2, 2}, {{0, 0, 2, 1.0}}), std::out_of_range);
    CHECK_THROWS_AS(
        SparseTensor(TensorShape{2, 2, 2}, {{0, 0, 0, 1.0}, {0, 0, 0, 2.0}}),
        std::invalid_argument);
}
