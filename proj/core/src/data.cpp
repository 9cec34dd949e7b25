#include "ngcn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ngcn/error.hpp"

namespace ngcn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

// Splits a CSV line into fields and parses them on demand.
class CsvLine {
 public:
  CsvLine(std::string_view text, const fs::path& file, std::size_t line_no)
      : rest_(text), file_(file), line_no_(line_no) {}

  bool done() const { return exhausted_; }

  template <typename T>
  T next() {
    if (exhausted_) fail("too few fields");
    const auto comma = rest_.find(',');
    std::string_view field = rest_.substr(0, comma);
    if (comma == std::string_view::npos) {
      exhausted_ = true;
      rest_ = {};
    } else {
      rest_.remove_prefix(comma + 1);
    }
    while (!field.empty() && (field.front() == ' ')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    T value{};
    const auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail("malformed field '" + std::string(field) + "'");
    }
    return value;
  }

  void expect_end() {
    if (!exhausted_) fail("too many fields");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw LoadError(file_.string() + ":" + std::to_string(line_no_) + ": " + why);
  }

 private:
  std::string_view rest_;
  const fs::path& file_;
  std::size_t line_no_;
  bool exhausted_ = false;
};

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  const std::string text = read_file(path);
  std::string_view view(text);
  std::size_t line_no = 0;
  while (!view.empty()) {
    const auto nl = view.find('\n');
    std::string_view line = view.substr(0, nl);
    view.remove_prefix(nl == std::string_view::npos ? view.size() : nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    CsvLine csv(line, path, line_no);
    fn(csv);
  }
}

std::vector<NodeIndex> read_index_list(const json& split, const char* key,
                                       const fs::path& path, std::size_t n) {
  if (!split.contains(key) || !split[key].is_array()) {
    throw LoadError(path.string() + ": missing array '" + key + "'");
  }
  std::vector<NodeIndex> out;
  out.reserve(split[key].size());
  for (const auto& v : split[key]) {
    if (!v.is_number_integer() || v.get<long long>() < 0 ||
        v.get<unsigned long long>() >= n) {
      throw LoadError(path.string() + ": '" + key + "' has invalid node id " +
                      v.dump());
    }
    out.push_back(v.get<NodeIndex>());
  }
  return out;
}

void write_number(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

std::vector<char> mask_from(const std::vector<NodeIndex>& ids, std::size_t n) {
  std::vector<char> mask(n, 0);
  for (auto i : ids) mask[i] = 1;
  return mask;
}

std::vector<NodeIndex> indices_of(const std::vector<char>& mask) {
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<NodeIndex>(i));
  }
  return out;
}

}  // namespace

void row_normalize_features(DenseMatrix& features) {
  auto m = features.eigen();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).cwiseAbs().sum();
    if (norm > 0.0) m.col(j) /= norm;
  }
}

void validate_bundle(const GraphBundle& b) {
  if (b.features.rows() != b.d0 || b.features.cols() != b.n) {
    throw UsageError("bundle: features are " + shape_string(b.features) +
                     ", expected " + std::to_string(b.d0) + "x" +
                     std::to_string(b.n));
  }
  if (b.labels.size() != b.n) throw UsageError("bundle: label count differs from n");
  for (int y : b.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= b.classes) {
      throw UsageError("bundle: label " + std::to_string(y) + " out of range");
    }
  }
  if (b.edges.node_count() != b.n) throw UsageError("bundle: adjacency size differs from n");
  std::vector<char> seen(b.n, 0);
  for (const auto* list : {&b.fixed_split.train, &b.fixed_split.val, &b.fixed_split.test}) {
    for (auto i : *list) {
      if (i >= b.n) throw UsageError("bundle: split index out of range");
      if (seen[i]) {
        throw UsageError("bundle: node " + std::to_string(i) +
                         " appears in more than one split list");
      }
      seen[i] = 1;
    }
  }
}

GraphBundle load_bundle(const fs::path& dir) {
  GraphBundle b;

  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);
  try {
    b.n = meta.at("n").get<std::size_t>();
    b.d0 = meta.at("d0").get<std::size_t>();
    b.classes = meta.at("c").get<std::size_t>();
    b.dataset = meta.value("dataset", dir.filename().string());
  } catch (const json::exception& e) {
    throw LoadError(meta_path.string() + ": " + e.what());
  }

  b.features = DenseMatrix(b.d0, b.n);
  std::vector<char> have_features(b.n, 0);
  const fs::path features_path = dir / "features.csv";
  for_each_line(features_path, [&](CsvLine& line) {
    const auto node = line.next<std::size_t>();
    if (node >= b.n) line.fail("node id " + std::to_string(node) + " out of range");
    if (have_features[node]) line.fail("duplicate node id " + std::to_string(node));
    have_features[node] = 1;
    for (std::size_t f = 0; f < b.d0; ++f) b.features(f, node) = line.next<double>();
    line.expect_end();
  });
  if (auto it = std::find(have_features.begin(), have_features.end(), 0);
      it != have_features.end()) {
    throw LoadError(features_path.string() + ": no row for node " +
                    std::to_string(it - have_features.begin()));
  }
  row_normalize_features(b.features);

  std::vector<Edge> edges;
  const fs::path edges_path = dir / "edges.csv";
  for_each_line(edges_path, [&](CsvLine& line) {
    const auto src = line.next<std::size_t>();
    const auto dst = line.next<std::size_t>();
    line.expect_end();
    if (src >= b.n || dst >= b.n) line.fail("edge endpoint out of range");
    edges.emplace_back(static_cast<NodeIndex>(src), static_cast<NodeIndex>(dst));
  });
  b.edges = SparseAdjacency::from_edge_list(b.n, edges);

  b.labels.assign(b.n, -1);
  const fs::path labels_path = dir / "labels.csv";
  for_each_line(labels_path, [&](CsvLine& line) {
    const auto node = line.next<std::size_t>();
    const auto label = line.next<long long>();
    line.expect_end();
    if (node >= b.n) line.fail("node id " + std::to_string(node) + " out of range");
    if (label < 0 || static_cast<std::size_t>(label) >= b.classes) {
      line.fail("label " + std::to_string(label) + " out of range [0, " +
                std::to_string(b.classes) + ")");
    }
    b.labels[node] = static_cast<int>(label);
  });
  if (auto it = std::find(b.labels.begin(), b.labels.end(), -1); it != b.labels.end()) {
    throw LoadError(labels_path.string() + ": no label for node " +
                    std::to_string(it - b.labels.begin()));
  }

  const fs::path split_path = dir / "split.json";
  const json split = read_json(split_path);
  b.fixed_split.train = read_index_list(split, "train", split_path, b.n);
  b.fixed_split.val = read_index_list(split, "val", split_path, b.n);
  b.fixed_split.test = read_index_list(split, "test", split_path, b.n);

  try {
    validate_bundle(b);
  } catch (const UsageError& e) {
    throw LoadError(dir.string() + ": " + e.what());
  }
  return b;
}

void save_bundle(const GraphBundle& b, const fs::path& dir) {
  validate_bundle(b);
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw LoadError((dir / name).string() + ": cannot write file");
    return out;
  };

  {
    auto out = open("meta.json");
    out << json{{"n", b.n}, {"d0", b.d0}, {"c", b.classes}, {"dataset", b.dataset}}.dump()
        << '\n';
  }
  {
    auto out = open("features.csv");
    for (std::size_t i = 0; i < b.n; ++i) {
      out << i;
      for (std::size_t f = 0; f < b.d0; ++f) {
        out << ',';
        write_number(out, b.features(f, i));
      }
      out << '\n';
    }
  }
  {
    auto out = open("edges.csv");
    for (const auto& [i, j] : b.edges.edges()) out << i << ',' << j << '\n';
  }
  {
    auto out = open("labels.csv");
    for (std::size_t i = 0; i < b.n; ++i) out << i << ',' << b.labels[i] << '\n';
  }
  {
    auto out = open("split.json");
    out << json{{"train", b.fixed_split.train},
                {"val", b.fixed_split.val},
                {"test", b.fixed_split.test}}
               .dump()
        << '\n';
  }
}

std::vector<NodeIndex> SplitMask::train_indices() const { return indices_of(train); }
std::vector<NodeIndex> SplitMask::val_indices() const { return indices_of(val); }
std::vector<NodeIndex> SplitMask::test_indices() const { return indices_of(test); }

SplitMask make_split(const GraphBundle& bundle, int split_id,
                     const SplitOptions& options) {
  const auto& fixed = bundle.fixed_split;
  const std::size_t n = bundle.n;
  SplitMask mask;

  switch (split_id) {
    case 1:
      mask.train = mask_from(fixed.train, n);
      mask.val = mask_from(fixed.val, n);
      mask.test = mask_from(fixed.test, n);
      break;
    case 2:
    case 3: {
      std::vector<NodeIndex> test = fixed.test;
      if (split_id == 3) {
        if (test.size() < options.split3_test_size) {
          throw UsageError("split 3 needs " + std::to_string(options.split3_test_size) +
                           " reserved test nodes but the bundle lists " +
                           std::to_string(test.size()));
        }
        test.resize(options.split3_test_size);
      }
      mask.val = mask_from(fixed.val, n);
      mask.test = mask_from(test, n);
      mask.train.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        mask.train[i] = !mask.val[i] && !mask.test[i];
      }
      break;
    }
    default:
      throw UsageError("split id must be 1, 2 or 3, got " + std::to_string(split_id));
  }

  mask.n_bar = static_cast<std::size_t>(
      std::count(mask.train.begin(), mask.train.end(), char{1}));
  const auto count = [](const std::vector<char>& m) {
    return std::count(m.begin(), m.end(), char{1});
  };
  if (mask.n_bar == 0 || count(mask.val) == 0 || count(mask.test) == 0) {
    throw UsageError("split " + std::to_string(split_id) + " on " +
                     std::to_string(n) + " nodes leaves an empty train, "
                     "validation or test set");
  }
  return mask;
}

}  // namespace ngcn
