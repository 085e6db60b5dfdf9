#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "gcnh/dataset.hpp"
#include "gcnh/error.hpp"
#include "helpers.hpp"

using namespace gcnh;
using namespace gcnh::testing;

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Four nodes: a-b (same), b-c (cross), c-d (same), a-d (cross).
void write_fixture(const fs::path& dir) {
    fs::create_directories(dir);
    write_file(dir / "nodes.tsv", "a\t0\t1,0\nb\t0\t0.5,0.25\nc\t1\t0,1\nd\t1\t-1,2\n");
    write_file(dir / "edges.tsv", "a\tb\nb\tc\nc\td\nd\ta\n");
    write_file(dir / "splits.json", R"([{"train":[0,1],"val":[2],"test":[3]}])");
}

} // namespace

TEST_CASE("save then load reproduces the dataset") {
    TempDir tmp("roundtrip");
    Dataset ds = random_dataset(30, 4, 3, 0.2, 5, 2);
    ds.name = "rt";
    // Values whose shortest decimal forms are long.
    ds.features(0, 0) = 0.1 + 0.2;
    ds.features(1, 1) = 1e-310;
    ds.features(2, 2) = -123456.789e100;
    save_dataset(ds, tmp.path / "rt");
    const Dataset back = load_dataset(tmp.path / "rt");
    CHECK(back.graph == ds.graph);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.splits == ds.splits);
    CHECK(back.name == "rt");
    // A second save of the reloaded dataset is byte-identical.
    save_dataset(back, tmp.path / "again");
    for (const char* f : {"nodes.tsv", "edges.tsv", "splits.json"}) {
        CHECK(read_file(tmp.path / "rt" / f) == read_file(tmp.path / "again" / f));
    }
}

TEST_CASE("hand-written fixture loads with remapped ids and known homophily") {
    TempDir tmp("fixture");
    write_fixture(tmp.path / "fx");
    const Dataset ds = load_dataset(tmp.path / "fx");
    CHECK(ds.num_nodes() == 4);
    CHECK(ds.num_features() == 2);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.node_ids == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(ds.features(1, 1) == 0.25);
    CHECK(ds.graph.num_edges() == 4);
    CHECK(edge_homophily(ds.graph, ds.labels).edge_homophily == 0.5);
}

TEST_CASE("duplicate edge lines collapse to one undirected edge") {
    TempDir tmp("dupe");
    write_fixture(tmp.path / "fx");
    write_file(tmp.path / "fx" / "edges.tsv", "a\tb\nb\ta\na\tb\n\nc\td\n");
    const Dataset ds = load_dataset(tmp.path / "fx");
    CHECK(ds.graph.num_edges() == 2);
}

TEST_CASE("save output is a fixed byte sequence") {
    TempDir tmp("golden");
    Dataset ds;
    ds.name = "g";
    const std::vector<Edge> e{{1, 0}, {1, 2}};
    ds.graph = build_graph(e, 3);
    ds.features = Matrix(3, 2, std::vector<double>{0.1, -2.5, 3.0, 0.0, 1e-300, 0.30000000000000004});
    ds.labels = LabelVector{{1, 0, 1}, 2};
    ds.node_ids = {"x", "y", "z"};
    ds.splits.push_back(SplitMask{{0}, {1}, {2}});
    save_dataset(ds, tmp.path / "g");
    CHECK(read_file(tmp.path / "g" / "nodes.tsv") == "x\t1\t0.1,-2.5\ny\t0\t3,0\nz\t1\t1e-300,0.30000000000000004\n");
    CHECK(read_file(tmp.path / "g" / "edges.tsv") == "x\ty\ny\tz\n");
    CHECK(read_file(tmp.path / "g" / "splits.json") == "[{\"test\":[2],\"train\":[0],\"val\":[1]}]\n");
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-0.0) == "-0");
    const double third = 1.0 / 3.0;
    CHECK(std::stod(format_double(third)) == third);
}

TEST_CASE("each failure mode raises its own error type") {
    TempDir tmp("errors");
    const fs::path dir = tmp.path / "fx";

    CHECK_THROWS_AS(load_dataset(tmp.path / "nope"), MissingFileError);

    write_fixture(dir);
    fs::remove(dir / "edges.tsv");
    CHECK_THROWS_AS(load_dataset(dir), MissingFileError);

    write_fixture(dir);
    write_file(dir / "nodes.tsv", "a\t0\t1,0\nb\t0\n");
    try {
        load_dataset(dir);
        FAIL("expected MalformedLineError");
    } catch (const MalformedLineError& e) {
        CHECK(e.line() == 2);
        CHECK(e.file() == "nodes.tsv");
    }

    write_fixture(dir);
    write_file(dir / "nodes.tsv", "a\t0\t1,0\nb\t0\t1,x\n");
    CHECK_THROWS_AS(load_dataset(dir), MalformedLineError);

    write_fixture(dir);
    write_file(dir / "edges.tsv", "a\tb\na\tzz\n");
    try {
        load_dataset(dir);
        FAIL("expected MalformedLineError");
    } catch (const MalformedLineError& e) {
        CHECK(e.line() == 2);
    }

    write_fixture(dir);
    write_file(dir / "nodes.tsv", "a\t0\t1,0\nb\t-1\t0,1\nc\t1\t0,1\nd\t1\t0,1\n");
    CHECK_THROWS_AS(load_dataset(dir), LabelOutOfRangeError);

    write_fixture(dir);
    write_file(dir / "splits.json", R"([{"train":[0,1],"val":[2],"test":[4]}])");
    CHECK_THROWS_AS(load_dataset(dir), SplitIndexOutOfRangeError);

    write_fixture(dir);
    write_file(dir / "splits.json", "[{\"train\":[0],\n\"val\":[1],\n\"test\":[2,]}]");
    try {
        load_dataset(dir);
        FAIL("expected MalformedLineError");
    } catch (const MalformedLineError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("datasets without features are rejected") {
    TempDir tmp("nofeat");
    Dataset ds = random_dataset(12, 2, 2, 0.3, 1, 1);
    ds.features = Matrix(12, 0);
    CHECK_THROWS_AS(save_dataset(ds, tmp.path / "x"), InputError);
}

TEST_CASE("split sizes follow floor arithmetic") {
    const auto s100 = generate_splits(100, kBenchmarkSplitRatios, 10, 1);
    REQUIRE(s100.size() == 10);
    for (const auto& s : s100) {
        CHECK(s.train.size() == 48);
        CHECK(s.val.size() == 32);
        CHECK(s.test.size() == 20);
    }
    const auto s183 = generate_splits(183, kBenchmarkSplitRatios, 3, 1);
    CHECK(s183[0].train.size() == 87);
    CHECK(s183[0].val.size() == 58);
    CHECK(s183[0].test.size() == 38);
}

TEST_CASE("splits are disjoint, exhaustive, seeded and distinct") {
    const auto a = generate_splits(183, kBenchmarkSplitRatios, 10, 9);
    const auto b = generate_splits(183, kBenchmarkSplitRatios, 10, 9);
    CHECK(a == b);
    CHECK(a != generate_splits(183, kBenchmarkSplitRatios, 10, 10));
    CHECK(a[0] != a[1]);
    for (const auto& s : a) {
        CHECK_NOTHROW(s.validate(183));
        std::set<NodeId> all(s.train.begin(), s.train.end());
        all.insert(s.val.begin(), s.val.end());
        all.insert(s.test.begin(), s.test.end());
        CHECK(all.size() == 183);
    }
}

TEST_CASE("split generation preconditions") {
    CHECK_THROWS_AS(generate_splits(9, kBenchmarkSplitRatios, 1, 0), InputError);
    CHECK_THROWS_AS(generate_splits(100, {0.5, 0.3, 0.1}, 1, 0), InputError);
    CHECK_NOTHROW(generate_splits(10, kSyntheticSplitRatios, 1, 0));
}

TEST_CASE("split validation") {
    SplitMask overlap{{0, 1}, {1}, {2}};
    CHECK_THROWS_AS(overlap.validate(5), InputError);
    SplitMask empty{{0}, {}, {2}};
    CHECK_THROWS_AS(empty.validate(5), InputError);
    SplitMask outside{{0}, {1}, {5}};
    CHECK_THROWS_AS(outside.validate(5), InputError);
}
