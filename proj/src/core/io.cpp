#include "coach/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include "coach/error.hpp"

namespace coach {
namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

template <class Int>
Int parse_int(std::string_view text, const std::string& where) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(where + ": expected integer, got '" + std::string(text) + "'");
  return value;
}

template <class Int>
std::vector<Int> parse_int_list(std::string_view text, const std::string& where) {
  std::vector<Int> out;
  if (text.empty()) return out;
  for (auto part : split(text, ',')) out.push_back(parse_int<Int>(part, where));
  return out;
}

template <class Int>
void write_int_list(std::ostream& out, const std::vector<Int>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << values[i];
  }
}

// Token reader for the model format.
class Tokens {
 public:
  explicit Tokens(std::istream& in) : in_(in) {}
  std::string next(const char* what) {
    std::string tok;
    if (!(in_ >> tok)) throw ParseError(std::string("model file truncated while reading ") + what);
    return tok;
  }
  void expect(std::string_view word) {
    const auto tok = next(std::string(word).c_str());
    if (tok != word)
      throw ParseError("model file: expected '" + std::string(word) + "', got '" + tok + "'");
  }
  template <class Int>
  Int integer(const char* what) {
    return parse_int<Int>(next(what), std::string("model file ") + what);
  }
  double real(const char* what) { return parse_double(next(what)); }

 private:
  std::istream& in_;
};

bool is_uniform_row(const auto& row) {
  const double u = 1.0 / static_cast<double>(row.size());
  for (Eigen::Index k = 0; k < row.size(); ++k)
    if (row(k) != u) return false;
  return true;
}

void write_row(std::ostream& out, const auto& row) {
  for (Eigen::Index k = 0; k < row.size(); ++k) out << ' ' << format_double(row(k));
}

void write_table(std::ostream& out, const char* name, const Matrix& m) {
  std::vector<Eigen::Index> explicit_rows;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    if (!is_uniform_row(m.row(r))) explicit_rows.push_back(r);
  out << name << " rows " << m.rows() << " cols " << m.cols() << " explicit "
      << explicit_rows.size() << '\n';
  for (auto r : explicit_rows) {
    out << r;
    write_row(out, m.row(r));
    out << '\n';
  }
}

Matrix read_table(Tokens& tok, const char* name) {
  tok.expect(name);
  tok.expect("rows");
  const auto rows = tok.integer<Eigen::Index>("rows");
  tok.expect("cols");
  const auto cols = tok.integer<Eigen::Index>("cols");
  tok.expect("explicit");
  const auto count = tok.integer<Eigen::Index>("explicit");
  if (rows < 0 || cols <= 0 || count < 0 || count > rows)
    throw ParseError(std::string("model file: bad shape for table ") + name);
  Matrix m = Matrix::Constant(rows, cols, 1.0 / static_cast<double>(cols));
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto r = tok.integer<Eigen::Index>("row index");
    if (r < 0 || r >= rows) throw ParseError(std::string("model file: row out of range in ") + name);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = tok.real("table entry");
  }
  return m;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return {buf.data(), ptr};
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError("expected number, got '" + std::string(text) + "'");
  return value;
}

void write_dataset(std::ostream& out, const LabeledDataset& dataset) {
  out << "coach-dataset " << kDatasetFormatVersion << " domain=" << dataset.domain
      << " agents=" << dataset.num_agents << " trajectories=" << dataset.trajectories.size()
      << '\n';
  for (const auto& t : dataset.trajectories) {
    out << t.seed << '\t';
    write_int_list(out, t.states);
    out << '\t';
    write_int_list(out, t.actions);
    out << '\t';
    if (!t.labeled()) {
      out << '-';
    } else {
      for (std::size_t i = 0; i < t.latents.size(); ++i) {
        if (i) out << ';';
        write_int_list(out, t.latents[i]);
      }
    }
    out << '\n';
  }
}

LabeledDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset: missing header");
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != "coach-dataset") throw ParseError("dataset: bad magic '" + magic + "'");
  if (version != kDatasetFormatVersion)
    throw ParseError("dataset: unsupported format version " + std::to_string(version));
  LabeledDataset ds;
  std::size_t expected = 0;
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("dataset header: bad field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "domain") ds.domain = value;
    else if (key == "agents") ds.num_agents = parse_int<int>(value, "dataset header agents");
    else if (key == "trajectories") expected = parse_int<std::size_t>(value, "dataset header trajectories");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "dataset line " + std::to_string(line_no);
    const auto fields = split(line, '\t');
    if (fields.size() != 4) throw ParseError(where + ": expected 4 tab-separated fields");
    Trajectory t;
    t.seed = parse_int<std::uint64_t>(fields[0], where);
    t.states = parse_int_list<StateId>(fields[1], where);
    t.actions = parse_int_list<JointActionId>(fields[2], where);
    if (fields[3] != "-") {
      for (auto part : split(fields[3], ';')) t.latents.push_back(parse_int_list<LatentId>(part, where));
      if (static_cast<int>(t.latents.size()) != ds.num_agents)
        throw ParseError(where + ": latent labels do not cover every agent");
    }
    if (t.states.size() != t.actions.size() + 1)
      throw ParseError(where + ": expected one more state than actions");
    for (const auto& row : t.latents)
      if (row.size() != t.states.size()) throw ParseError(where + ": latent label count mismatch");
    ds.trajectories.push_back(std::move(t));
  }
  if (ds.trajectories.size() != expected)
    throw ParseError("dataset: header announces " + std::to_string(expected) +
                     " trajectories, found " + std::to_string(ds.trajectories.size()));
  return ds;
}

void save_dataset(const std::filesystem::path& path, const LabeledDataset& dataset) {
  std::ostringstream os;
  write_dataset(os, dataset);
  write_file_atomic(path, os.str());
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  return read_dataset(in);
}

void write_models(std::ostream& out, std::span<const AgentBehaviorModel> models) {
  out << "coach-model " << kModelFormatVersion << '\n';
  out << "agents " << models.size() << '\n';
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    const auto& tx = m.latent_transition();
    out << "agent " << i << " latents " << m.num_latents() << " actions " << m.num_actions()
        << " states " << m.num_states() << " joint_actions " << tx.num_joint_actions() << '\n';
    write_table(out, "initial_belief", m.initial_belief());
    write_table(out, "policy", m.policy());
    out << "latent_transition fallback";
    write_row(out, tx.fallback().reshaped<Eigen::RowMajor>().transpose());
    out << "\nblocks " << tx.blocks().size() << '\n';
    for (const auto& [key, block] : tx.blocks()) {
      out << key;
      write_row(out, block.reshaped<Eigen::RowMajor>().transpose());
      out << '\n';
    }
  }
  out << "end\n";
}

std::vector<AgentBehaviorModel> read_models(std::istream& in) {
  Tokens tok(in);
  tok.expect("coach-model");
  const int version = tok.integer<int>("version");
  if (version != kModelFormatVersion)
    throw ParseError("model file: unsupported format version " + std::to_string(version));
  tok.expect("agents");
  const int n = tok.integer<int>("agent count");
  std::vector<AgentBehaviorModel> models;
  for (int i = 0; i < n; ++i) {
    tok.expect("agent");
    if (tok.integer<int>("agent index") != i) throw ParseError("model file: agents out of order");
    tok.expect("latents");
    const int X = tok.integer<int>("latents");
    tok.expect("actions");
    const int A = tok.integer<int>("actions");
    tok.expect("states");
    const auto S = tok.integer<std::int32_t>("states");
    tok.expect("joint_actions");
    const auto J = tok.integer<std::int32_t>("joint_actions");
    if (X <= 0 || A <= 0 || S <= 0 || J <= 0) throw ParseError("model file: bad agent header");
    Matrix b = read_table(tok, "initial_belief");
    Matrix pi = read_table(tok, "policy");
    if (b.rows() != S || b.cols() != X || pi.rows() != static_cast<Eigen::Index>(S) * X ||
        pi.cols() != A)
      throw ParseError("model file: table shapes disagree with agent header");
    tok.expect("latent_transition");
    tok.expect("fallback");
    Matrix fallback(X, X);
    for (int r = 0; r < X; ++r)
      for (int c = 0; c < X; ++c) fallback(r, c) = tok.real("fallback entry");
    LatentTransitionTable tx(X, S, J, std::move(fallback));
    tok.expect("blocks");
    const auto count = tok.integer<std::int64_t>("block count");
    for (std::int64_t k = 0; k < count; ++k) {
      const auto key = tok.integer<std::int64_t>("block context");
      if (key < 0 || key >= static_cast<std::int64_t>(S) * J)
        throw ParseError("model file: block context out of range");
      Matrix block(X, X);
      for (int r = 0; r < X; ++r)
        for (int c = 0; c < X; ++c) block(r, c) = tok.real("block entry");
      tx.set(static_cast<StateId>(key / J), static_cast<JointActionId>(key % J), std::move(block));
    }
    models.emplace_back(X, A, std::move(b), std::move(pi), std::move(tx));
  }
  tok.expect("end");
  return models;
}

void save_models(const std::filesystem::path& path, std::span<const AgentBehaviorModel> models) {
  std::ostringstream os;
  write_models(os, models);
  write_file_atomic(path, os.str());
}

std::vector<AgentBehaviorModel> load_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  return read_models(in);
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace coach
