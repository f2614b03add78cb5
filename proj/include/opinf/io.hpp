#pragma once

// Persistence: matrix files, problem-definition JSON, snapshot archives and
// model directories. Matrices are raw little-endian float64 in column-major
// order (.bin, shape kept in the accompanying JSON) or MatrixMarket array
// text (.mtx) for interchange.

#include "opinf/basis.hpp"
#include "opinf/inference.hpp"
#include "opinf/problems.hpp"
#include "opinf/rom.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace opinf::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kBinaryEncoding = "float64-le-colmajor";

namespace detail {

inline std::uint64_t byteswap64(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return out;
}

inline void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

}  // namespace detail

inline void write_matrix_bin(const fs::path& path, const Matrix& m) {
  detail::ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  std::vector<std::uint64_t> words(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t w;
    const double v = m.data()[i];
    std::memcpy(&w, &v, sizeof w);
    if constexpr (std::endian::native == std::endian::big) w = detail::byteswap64(w);
    words[static_cast<std::size_t>(i)] = w;
  }
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  if (!out) throw FormatError("short write to " + path.string());
}

inline Matrix read_matrix_bin(const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  const auto expected = static_cast<std::uintmax_t>(rows * cols) * sizeof(double);
  if (fs::file_size(path) != expected)
    throw FormatError(path.string() + " holds " + std::to_string(fs::file_size(path)) + " bytes, expected " +
                      std::to_string(expected) + " for a " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " matrix");
  Matrix m(rows, cols);
  std::vector<std::uint64_t> words(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint64_t w = words[i];
    if constexpr (std::endian::native == std::endian::big) w = detail::byteswap64(w);
    std::memcpy(m.data() + i, &w, sizeof w);
  }
  return m;
}

inline void write_matrix_mtx(const fs::path& path, const Matrix& m) {
  detail::ensure_parent(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out << m(i, j) << '\n';
}

inline Matrix read_matrix_mtx(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket matrix array real general", 0) != 0)
    throw FormatError(path.string() + ": expected a MatrixMarket 'array real general' header");
  while (std::getline(in, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream dims(line);
  Eigen::Index rows = -1, cols = -1;
  if (!(dims >> rows >> cols) || rows < 0 || cols < 0) throw FormatError(path.string() + ": bad size line");
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      if (!(in >> m(i, j))) throw FormatError(path.string() + ": too few entries");
  return m;
}

/// Dispatch on extension; .bin needs the shape from its manifest.
inline Matrix read_matrix_file(const fs::path& path, Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (path.extension() == ".mtx") {
    Matrix m = read_matrix_mtx(path);
    if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols))
      throw ShapeError(path.string() + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    return m;
  }
  if (rows < 0 || cols < 0) throw FormatError(path.string() + ": raw matrix file needs rows and cols");
  return read_matrix_bin(path, rows, cols);
}

inline json matrix_to_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix rows_to_matrix(const json& rows) {
  if (!rows.is_array()) throw FormatError("inline matrix must be a list of rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) throw FormatError("ragged inline matrix");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

/// {"file", "rows", "cols"} reference next to a JSON document.
inline json matrix_ref(const fs::path& dir, const std::string& file, const Matrix& m) {
  write_matrix_bin(dir / file, m);
  return json{{"file", file}, {"rows", m.rows()}, {"cols", m.cols()}, {"encoding", kBinaryEncoding}};
}

/// Inline rows, a path string (.mtx) or a {"file", "rows", "cols"} object.
inline Matrix read_matrix_json(const json& j, const fs::path& base) {
  if (j.is_array()) return rows_to_matrix(j);
  if (j.is_string()) return read_matrix_file(base / j.get<std::string>());
  if (j.is_object() && j.contains("file"))
    return read_matrix_file(base / j.at("file").get<std::string>(), j.value("rows", Eigen::Index{-1}),
                            j.value("cols", Eigen::Index{-1}));
  throw FormatError("matrix must be inline rows, a file path or a {file, rows, cols} object");
}

// ---------------------------------------------------------------- hashing

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ull;
    }
  }
  void u64(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) v = detail::byteswap64(v);
    bytes(&v, sizeof v);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t w;
    std::memcpy(&w, &v, sizeof w);
    u64(w);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void matrix(const Matrix& m) {
    i64(m.rows());
    i64(m.cols());
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  std::string hex() const {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << state_;
    return out.str();
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

/// Hash of the mathematical content; the display name does not enter.
inline std::string problem_hash(const ProblemDefinition& p) {
  Fnv1a h;
  h.str(to_string(p.kind));
  h.i64(p.n);
  h.u64(p.s);
  h.u64(p.d);
  for (const auto& iv : p.domain) {
    h.f64(iv.lower);
    h.f64(iv.upper);
  }
  auto family = [&h](const AffineFamily& f) {
    h.i64(f.rows());
    h.i64(f.cols());
    h.u64(f.terms().size());
    for (const auto& t : f.terms()) {
      h.f64(t.theta.coefficient);
      for (int e : t.theta.exponents) h.i64(e);
      h.matrix(t.matrix);
    }
  };
  h.str("A");
  for (const auto& f : p.A) family(f);
  h.str("M");
  for (const auto& f : p.M) family(f);
  if (p.B) {
    h.str("B");
    family(*p.B);
  }
  if (p.coupling) {
    h.str("Pi");
    h.matrix(*p.coupling);
  }
  return h.hex();
}

// ------------------------------------------------------ problem definitions

inline json theta_to_json(const ThetaMonomial& t) { return json{{"coefficient", t.coefficient}, {"exponents", t.exponents}}; }

inline ThetaMonomial theta_from_json(const json& j) {
  return {j.value("coefficient", 1.0), j.at("exponents").get<std::vector<int>>()};
}

inline json groups_to_json(const ThetaGroups& g) {
  auto list = [](const std::vector<ThetaMonomial>& v) {
    json out = json::array();
    for (const auto& t : v) out.push_back(theta_to_json(t));
    return out;
  };
  return json{{"C2", list(g.theta_C2)}, {"C1", list(g.theta_C1)}, {"C0", list(g.theta_C0)}};
}

inline ThetaGroups groups_from_json(const json& j) {
  auto list = [](const json& v) {
    std::vector<ThetaMonomial> out;
    for (const auto& t : v) out.push_back(theta_from_json(t));
    return out;
  };
  return {list(j.at("C2")), list(j.at("C1")), list(j.at("C0"))};
}

namespace detail {

inline AffineFamily family_from_json(const json& j, std::size_t d, const fs::path& base, const std::string& what) {
  // plain term list, or {rows, cols, terms} when the shape cannot be inferred
  const json& terms = j.is_object() ? j.at("terms") : j;
  if (!terms.is_array()) throw FormatError(what + ": family must be a list of terms");
  std::vector<AffineTerm> parsed;
  for (const auto& t : terms) {
    AffineTerm term;
    term.theta = {t.value("coefficient", 1.0), t.at("exponents").get<std::vector<int>>()};
    if (term.theta.exponents.size() != d)
      throw FormatError(what + ": exponent vector of length " + std::to_string(term.theta.exponents.size()) +
                        " for parameter dimension " + std::to_string(d));
    term.matrix = read_matrix_json(t.at("matrix"), base);
    parsed.push_back(std::move(term));
  }
  Eigen::Index rows = -1, cols = -1;
  if (j.is_object()) {
    rows = j.at("rows").get<Eigen::Index>();
    cols = j.at("cols").get<Eigen::Index>();
  } else if (!parsed.empty()) {
    rows = parsed[0].matrix.rows();
    cols = parsed[0].matrix.cols();
  } else {
    throw FormatError(what + ": empty family needs an explicit {rows, cols, terms} form");
  }
  return AffineFamily(rows, cols, d, parsed);
}

/// A single family when the first entry is a term object, else a list of families.
inline std::vector<AffineFamily> families_from_json(const json& j, std::size_t d, const fs::path& base,
                                                    const std::string& what) {
  if (!j.is_array() || j.empty()) throw FormatError(what + ": expected a nonempty list");
  if (j[0].is_object() && j[0].contains("matrix")) return {family_from_json(j, d, base, what)};
  std::vector<AffineFamily> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(family_from_json(j[i], d, base, what + "[" + std::to_string(i) + "]"));
  return out;
}

struct MatrixSink {
  const fs::path* dir = nullptr;  // null: inline
  std::size_t counter = 0;
  json put(const Matrix& m, const std::string& stem) {
    if (!dir) return matrix_to_rows(m);
    return matrix_ref(*dir, stem + "_" + std::to_string(counter++) + ".bin", m);
  }
};

inline json family_to_json(const AffineFamily& f, MatrixSink& sink, const std::string& stem) {
  json terms = json::array();
  for (const auto& t : f.terms())
    terms.push_back(json{{"coefficient", t.theta.coefficient}, {"exponents", t.theta.exponents}, {"matrix", sink.put(t.matrix, stem)}});
  if (f.empty()) return json{{"rows", f.rows()}, {"cols", f.cols()}, {"terms", terms}};
  return terms;
}

}  // namespace detail

inline ProblemDefinition problem_from_json(const json& j, const fs::path& base = ".") {
  ProblemDefinition p;
  p.kind = parse_kind(j.at("kind").get<std::string>());
  p.name = j.value("name", std::string{});
  p.n = j.at("n").get<Eigen::Index>();
  p.s = j.value("s", std::size_t{1});
  p.d = j.value("d", std::size_t{1});
  for (const auto& iv : j.at("domain")) {
    if (!iv.is_array() || iv.size() != 2) throw FormatError("domain entries must be [lower, upper]");
    p.domain.push_back({iv[0].get<double>(), iv[1].get<double>()});
  }
  const json& fam = j.at("families");
  p.A = detail::families_from_json(fam.at("A"), p.d, base, "A");
  p.M = detail::families_from_json(fam.at("M"), p.d, base, "M");
  if (fam.contains("B")) p.B = detail::family_from_json(fam.at("B"), p.d, base, "B");
  if (fam.contains("Pi")) p.coupling = read_matrix_json(fam.at("Pi"), base);
  check_structure(p);
  return p;
}

inline ProblemDefinition load_problem(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read problem file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return problem_from_json(j, path.parent_path());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// With matrix_dir set, matrices are written there as .bin files and
/// referenced relative to it; otherwise they are inlined.
inline json problem_to_json(const ProblemDefinition& p, const fs::path* matrix_dir = nullptr) {
  detail::MatrixSink sink{matrix_dir};
  json j;
  j["kind"] = to_string(p.kind);
  if (!p.name.empty()) j["name"] = p.name;
  j["n"] = p.n;
  j["s"] = p.s;
  j["d"] = p.d;
  json domain = json::array();
  for (const auto& iv : p.domain) domain.push_back({iv.lower, iv.upper});
  j["domain"] = domain;
  json fam;
  auto list = [&](const std::vector<AffineFamily>& fs_, const std::string& stem) {
    if (fs_.size() == 1) return detail::family_to_json(fs_[0], sink, stem);
    json out = json::array();
    for (std::size_t i = 0; i < fs_.size(); ++i) out.push_back(detail::family_to_json(fs_[i], sink, stem + std::to_string(i)));
    return out;
  };
  fam["A"] = list(p.A, "A");
  fam["M"] = list(p.M, "M");
  if (p.B) fam["B"] = detail::family_to_json(*p.B, sink, "B");
  if (p.coupling) fam["Pi"] = sink.put(*p.coupling, "Pi");
  j["families"] = fam;
  return j;
}

inline void write_json(const fs::path& path, const json& j) {
  detail::ensure_parent(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// problem.json plus its matrices inside dir.
inline void save_problem(const ProblemDefinition& p, const fs::path& dir) {
  fs::create_directories(dir);
  write_json(dir / "problem.json", problem_to_json(p, &dir));
}

inline json parameters_to_json(const std::vector<Parameter>& params) {
  json out = json::array();
  for (const auto& mu : params) out.push_back(mu);
  return out;
}

inline std::vector<Parameter> parameters_from_json(const json& j) {
  std::vector<Parameter> out;
  for (const auto& mu : j) out.push_back(mu.get<Parameter>());
  return out;
}

// --------------------------------------------------------- snapshot archive

struct SnapshotArchive {
  SnapshotSet snapshots;
  ProblemDefinition problem;
  json manifest;
};

/// dir/manifest.json, dir/states.bin and dir/problem/.
inline void save_snapshots(const fs::path& dir, const SnapshotSet& set, const ProblemDefinition& problem, json extra = {}) {
  fs::create_directories(dir);
  json m;
  m["format"] = "opinf-snapshots";
  m["tool_version"] = kToolVersion;
  m["problem_hash"] = problem_hash(problem);
  m["problem_name"] = problem.name;
  m["kind"] = to_string(problem.kind);
  m["state_dimension"] = problem.state_dimension();
  m["count"] = set.count();
  m["parameters"] = parameters_to_json(set.parameters);
  if (!set.residuals.empty()) {
    m["residuals"] = set.residuals;
    m["max_residual"] = *std::max_element(set.residuals.begin(), set.residuals.end());
  }
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  m["states"] = matrix_ref(dir, "states.bin", set.states);
  m["problem"] = "problem/problem.json";
  save_problem(problem, dir / "problem");
  write_json(dir / "manifest.json", m);
}

inline SnapshotArchive load_snapshots(const fs::path& dir) {
  SnapshotArchive a;
  a.manifest = read_json(dir / "manifest.json");
  if (a.manifest.value("format", std::string{}) != "opinf-snapshots")
    throw FormatError(dir.string() + " is not a snapshot archive");
  try {
    a.problem = load_problem(dir / a.manifest.at("problem").get<std::string>());
    a.snapshots.parameters = parameters_from_json(a.manifest.at("parameters"));
    a.snapshots.states = read_matrix_json(a.manifest.at("states"), dir);
    if (a.manifest.contains("residuals")) a.snapshots.residuals = a.manifest.at("residuals").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  }
  a.snapshots.problem_ref = a.problem.name;
  if (a.snapshots.states.cols() != static_cast<Eigen::Index>(a.snapshots.parameters.size()))
    throw FormatError(dir.string() + ": state count does not match parameter count");
  if (problem_hash(a.problem) != a.manifest.at("problem_hash").get<std::string>())
    throw FormatError(dir.string() + ": stored problem does not match the recorded problem hash");
  return a;
}

// ------------------------------------------------------------ model directory

struct ModelBundle {
  ReducedModel model;
  Matrix V;
  ProblemDefinition problem;
  json manifest;
};

inline json rank_report_to_json(const RankReport& r) {
  return json{{"samples", r.samples},
              {"samples_exceed_unknowns", r.samples_exceed_unknowns},
              {"rank_D", r.rank_D},
              {"cols_D", r.cols_D},
              {"rank_Theta_C2", r.rank_Theta_C2},
              {"rank_Theta_C1", r.rank_Theta_C1},
              {"rank_Theta_C0", r.rank_Theta_C0},
              {"rank_Xhat2", r.rank_Xhat2},
              {"rank_Xhat", r.rank_Xhat},
              {"D_full_rank", r.D_full_rank},
              {"Theta_C2_full_rank", r.Theta_C2_full_rank},
              {"Theta_C1_full_rank", r.Theta_C1_full_rank},
              {"Theta_C0_full_rank", r.Theta_C0_full_rank},
              {"Xhat2_full_rank", r.Xhat2_full_rank},
              {"Xhat_full_rank", r.Xhat_full_rank},
              {"all_full_rank", r.all_full_rank()}};
}

/// dir/manifest.json, one .bin per operator, dir/basis.bin and dir/problem/.
inline void save_model(const fs::path& dir, const ReducedModel& m, const Matrix& v, const ProblemDefinition& problem,
                       json extra = {}) {
  m.check_shapes();
  if (v.cols() != m.r) throw ShapeError("basis width does not match model dimension");
  fs::create_directories(dir);
  json j;
  j["format"] = "opinf-model";
  j["tool_version"] = kToolVersion;
  j["method"] = m.method;
  j["r"] = m.r;
  j["lambda1"] = m.lambda1;
  j["lambda2"] = m.lambda2;
  j["theta_groups"] = groups_to_json(m.theta_groups);
  json ops = json::object();
  auto put = [&](const std::string& block, const auto& list) {
    json arr = json::array();
    for (std::size_t i = 0; i < list.size(); ++i) arr.push_back(matrix_ref(dir, block + "_" + std::to_string(i) + ".bin", Matrix(list[i])));
    ops[block] = arr;
  };
  put("C2", m.C2_ops);
  put("C1", m.C1_ops);
  put("C0", m.C0_ops);
  j["operators"] = ops;
  j["basis"] = matrix_ref(dir, "basis.bin", v);
  j["basis"]["ref"] = m.basis_ref;
  j["problem_hash"] = problem_hash(problem);
  j["problem"] = "problem/problem.json";
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  save_problem(problem, dir / "problem");
  write_json(dir / "manifest.json", j);
}

inline ModelBundle load_model(const fs::path& dir) {
  ModelBundle b;
  b.manifest = read_json(dir / "manifest.json");
  const json& j = b.manifest;
  if (j.value("format", std::string{}) != "opinf-model") throw FormatError(dir.string() + " is not a model directory");
  try {
    ReducedModel& m = b.model;
    m.method = j.at("method").get<std::string>();
    m.r = j.at("r").get<Eigen::Index>();
    m.lambda1 = j.at("lambda1").get<double>();
    m.lambda2 = j.at("lambda2").get<double>();
    m.theta_groups = groups_from_json(j.at("theta_groups"));
    m.basis_ref = j.at("basis").value("ref", std::string{});
    for (const auto& ref : j.at("operators").at("C2")) m.C2_ops.push_back(read_matrix_json(ref, dir));
    for (const auto& ref : j.at("operators").at("C1")) m.C1_ops.push_back(read_matrix_json(ref, dir));
    for (const auto& ref : j.at("operators").at("C0")) m.C0_ops.push_back(read_matrix_json(ref, dir));
    b.V = read_matrix_json(j.at("basis"), dir);
    b.problem = load_problem(dir / j.at("problem").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  }
  b.model.check_shapes();
  if (problem_hash(b.problem) != j.at("problem_hash").get<std::string>())
    throw FormatError(dir.string() + ": stored problem does not match the recorded problem hash");
  if (b.V.cols() != b.model.r || b.V.rows() != b.problem.state_dimension())
    throw ShapeError(dir.string() + ": basis shape does not match model and problem");
  return b;
}

// --------------------------------------------------------------------- CSV

/// Shortest text that round-trips; NaN and inf spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  detail::ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace opinf::io
