#include "gcnh/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "gcnh/error.hpp"
#include "gcnh/rng.hpp"

namespace gcnh {

namespace fs = std::filesystem;
using nlohmann::json;

void SplitMask::validate(std::size_t num_nodes) const {
    if (train.empty() || val.empty() || test.empty()) {
        throw InputError("split: train, val and test must all be nonempty");
    }
    std::vector<char> seen(num_nodes, 0);
    for (const auto* part : {&train, &val, &test}) {
        for (NodeId u : *part) {
            if (u >= num_nodes) {
                throw InputError("split: node " + std::to_string(u) + " out of range");
            }
            if (seen[u]) {
                throw InputError("split: node " + std::to_string(u) + " appears twice");
            }
            seen[u] = 1;
        }
    }
}

void Dataset::validate() const {
    const std::size_t n = graph.num_nodes();
    if (features.rows() != n || labels.size() != n) {
        throw InputError("dataset '" + name + "': row counts disagree with node count");
    }
    if (features.cols() == 0) {
        throw InputError("dataset '" + name + "': feature width must be >= 1");
    }
    if (!node_ids.empty() && node_ids.size() != n) {
        throw InputError("dataset '" + name + "': node id count disagrees with node count");
    }
    labels.validate();
    if (splits.empty()) {
        throw InputError("dataset '" + name + "': needs at least one split");
    }
    for (const auto& s : splits) {
        s.validate(n);
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::ifstream open_input(const fs::path& path) {
    if (!fs::exists(path)) {
        throw MissingFileError("missing dataset file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return line;
}

std::vector<NodeId> parse_index_array(const json& arr, const std::string& what, std::size_t n) {
    if (!arr.is_array()) {
        throw IoError("splits.json: '" + what + "' is not an array");
    }
    std::vector<NodeId> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number_integer()) {
            throw IoError("splits.json: non-integer index in '" + what + "'");
        }
        const auto idx = v.get<std::int64_t>();
        if (idx < 0 || static_cast<std::uint64_t>(idx) >= n) {
            throw SplitIndexOutOfRangeError("splits.json: index " + std::to_string(idx) + " in '" +
                                            what + "' outside [0, " + std::to_string(n) + ")");
        }
        out.push_back(static_cast<NodeId>(idx));
    }
    return out;
}

} // namespace

Dataset load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw MissingFileError("dataset directory not found: " + dir.string());
    }
    Dataset ds;
    ds.name = dir.filename().string();
    if (ds.name.empty()) {
        ds.name = dir.parent_path().filename().string();
    }

    // nodes.tsv
    std::unordered_map<std::string, NodeId> index_of;
    std::vector<double> values;
    std::size_t width = 0;
    std::int64_t max_label = -1;
    {
        const std::string file = "nodes.tsv";
        auto in = open_input(dir / file);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(std::move(line));
            if (line.empty()) {
                continue;
            }
            const auto fields = split_on(line, '\t');
            if (fields.size() != 3) {
                throw MalformedLineError(file, line_no, "expected 3 tab-separated fields");
            }
            const std::string id(fields[0]);
            if (id.empty()) {
                throw MalformedLineError(file, line_no, "empty node id");
            }
            std::int64_t label = 0;
            if (!parse_number(fields[1], label)) {
                throw MalformedLineError(file, line_no, "label is not an integer");
            }
            if (label < 0) {
                throw LabelOutOfRangeError(file + ":" + std::to_string(line_no) + ": label " +
                                           std::to_string(label) + " is negative");
            }
            const auto feats = split_on(fields[2], ',');
            if (ds.node_ids.empty()) {
                width = feats.size();
            } else if (feats.size() != width) {
                throw MalformedLineError(file, line_no,
                                         "expected " + std::to_string(width) + " features, got " +
                                             std::to_string(feats.size()));
            }
            for (const auto& f : feats) {
                double v = 0.0;
                if (!parse_number(f, v)) {
                    throw MalformedLineError(file, line_no, "bad feature value '" + std::string(f) + "'");
                }
                values.push_back(v);
            }
            if (!index_of.emplace(id, static_cast<NodeId>(ds.node_ids.size())).second) {
                throw MalformedLineError(file, line_no, "duplicate node id '" + id + "'");
            }
            ds.node_ids.push_back(id);
            ds.labels.labels.push_back(static_cast<std::int32_t>(label));
            max_label = std::max(max_label, label);
        }
    }
    const std::size_t n = ds.node_ids.size();
    if (n == 0) {
        throw IoError("nodes.tsv: no nodes");
    }
    ds.labels.num_classes = static_cast<std::size_t>(max_label + 1);
    if (ds.labels.num_classes < 2) {
        throw LabelOutOfRangeError("nodes.tsv: labels span fewer than 2 classes");
    }
    ds.features = Matrix(n, width, std::move(values));

    // edges.tsv
    std::vector<Edge> edges;
    {
        const std::string file = "edges.tsv";
        auto in = open_input(dir / file);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            line = strip_cr(std::move(line));
            if (line.empty()) {
                continue;
            }
            const auto fields = split_on(line, '\t');
            if (fields.size() != 2) {
                throw MalformedLineError(file, line_no, "expected 2 tab-separated fields");
            }
            const auto src = index_of.find(std::string(fields[0]));
            const auto dst = index_of.find(std::string(fields[1]));
            if (src == index_of.end() || dst == index_of.end()) {
                throw MalformedLineError(file, line_no, "edge references unknown node id");
            }
            edges.emplace_back(src->second, dst->second);
        }
    }
    ds.graph = Graph::from_edges(edges, n);

    // splits.json
    {
        const std::string file = "splits.json";
        auto in = open_input(dir / file);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            const auto upto = std::min<std::size_t>(e.byte, text.size());
            const auto line_no =
                1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
            throw MalformedLineError(file, line_no, "invalid JSON");
        }
        if (!doc.is_array()) {
            throw IoError("splits.json: top level must be an array");
        }
        for (const auto& entry : doc) {
            if (!entry.is_object() || !entry.contains("train") || !entry.contains("val") ||
                !entry.contains("test")) {
                throw IoError("splits.json: each split needs train, val and test");
            }
            SplitMask s;
            s.train = parse_index_array(entry["train"], "train", n);
            s.val = parse_index_array(entry["val"], "val", n);
            s.test = parse_index_array(entry["test"], "test", n);
            ds.splits.push_back(std::move(s));
        }
    }
    ds.validate();
    return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
    dataset.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    auto id_of = [&](NodeId u) {
        return dataset.node_ids.empty() ? std::to_string(u) : dataset.node_ids[u];
    };
    auto open_output = [](const fs::path& p) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + p.string());
        }
        return out;
    };

    {
        auto out = open_output(dir / "nodes.tsv");
        std::string line;
        for (NodeId u = 0; u < dataset.num_nodes(); ++u) {
            line = id_of(u);
            line += '\t';
            line += std::to_string(dataset.labels[u]);
            line += '\t';
            const auto row = dataset.features.row(u);
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j > 0) {
                    line += ',';
                }
                line += format_double(row[j]);
            }
            line += '\n';
            out << line;
        }
        if (!out) {
            throw IoError("write failed: nodes.tsv");
        }
    }
    {
        auto out = open_output(dir / "edges.tsv");
        for (const auto& [u, v] : dataset.graph.edge_list()) {
            out << id_of(u) << '\t' << id_of(v) << '\n';
        }
        if (!out) {
            throw IoError("write failed: edges.tsv");
        }
    }
    {
        json doc = json::array();
        for (const auto& s : dataset.splits) {
            doc.push_back({{"train", s.train}, {"val", s.val}, {"test", s.test}});
        }
        auto out = open_output(dir / "splits.json");
        out << doc.dump() << '\n';
        if (!out) {
            throw IoError("write failed: splits.json");
        }
    }
}

std::vector<SplitMask> generate_splits(std::size_t n, std::array<double, 3> ratios,
                                       std::size_t count, std::uint64_t seed) {
    if (n < 10) {
        throw InputError("generate_splits: need at least 10 nodes");
    }
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9 || ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0) {
        throw InputError("generate_splits: ratios must be positive and sum to 1");
    }
    // The small offset keeps exact products like 0.48 * 100 from flooring to 47.
    const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));

    std::vector<SplitMask> splits;
    splits.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        Rng rng(mix_seed(seed, s));
        std::vector<NodeId> order(n);
        std::iota(order.begin(), order.end(), NodeId{0});
        rng.shuffle(std::span<NodeId>(order));
        SplitMask m;
        m.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
        m.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                     order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        m.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
        for (auto* part : {&m.train, &m.val, &m.test}) {
            std::sort(part->begin(), part->end());
        }
        splits.push_back(std::move(m));
    }
    return splits;
}

} // namespace gcnh
