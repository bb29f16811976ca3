#include "hampdti/tensor/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hampdti/error.hpp"

namespace hampdti::tensor {

const Matrix& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw Error("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return {buf, ptr};
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) throw Error("malformed number '" + token + "'");
  return v;
}

namespace {

void write_rows(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_rows(std::istream& in, std::size_t rows, std::size_t cols, std::size_t& line_no) {
  Matrix m(rows, cols);
  std::string line, tok;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw Error("unexpected end of file at line " + std::to_string(line_no + 1));
    ++line_no;
    std::istringstream ls(line);
    std::size_t c = 0;
    while (ls >> tok) {
      if (c >= cols) throw Error("too many values on line " + std::to_string(line_no));
      m(r, c++) = parse_double(tok);
    }
    if (c != cols) throw Error("expected " + std::to_string(cols) + " values on line " + std::to_string(line_no));
  }
  return m;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "hampdti-checkpoint 1\n";
  for (const auto& [k, v] : ckpt.meta) out << "meta " << k << ' ' << v << '\n';
  for (const auto& t : ckpt.tensors) {
    if (t.name.find_first_of(" \t\n") != std::string::npos) throw Error("tensor name has whitespace: " + t.name);
    out << "tensor " << t.name << ' ' << t.value.rows << ' ' << t.value.cols << '\n';
    write_rows(out, t.value);
  }
  out << "end\n";
  return out.str();
}

Checkpoint checkpoint_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "hampdti-checkpoint 1") throw Error("not a version-1 checkpoint");
  Checkpoint ckpt;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "end") return ckpt;
    if (kind == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      ckpt.meta[key] = value;
    } else if (kind == "tensor") {
      NamedMatrix t;
      std::size_t rows = 0, cols = 0;
      if (!(ls >> t.name >> rows >> cols)) throw Error("bad tensor header on line " + std::to_string(line_no));
      t.value = read_rows(in, rows, cols, line_no);
      ckpt.tensors.push_back(std::move(t));
    } else {
      throw Error("unexpected checkpoint record on line " + std::to_string(line_no));
    }
  }
  throw Error("checkpoint is truncated (missing 'end')");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << checkpoint_to_string(ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# hampdti-matrix " << m.rows << ' ' << m.cols << '\n';
  write_rows(out, m);
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty matrix file");
  std::istringstream hs(line);
  std::string hash, tag;
  std::size_t rows = 0, cols = 0;
  if (!(hs >> hash >> tag >> rows >> cols) || hash != "#" || tag != "hampdti-matrix") {
    throw Error(path.string() + ": missing '# hampdti-matrix <rows> <cols>' header");
  }
  std::size_t line_no = 1;
  return read_rows(in, rows, cols, line_no);
}

}  // namespace hampdti::tensor
