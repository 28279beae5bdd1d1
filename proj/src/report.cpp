#include "xgnn/report.hpp"

#include "xgnn/expander.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace xgnn {
using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_atomic(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string file_stem(const std::string& name) {
  std::string s = name;
  for (char& c : s)
    if (c == '/' || c == '\\') c = '_';
  return s;
}

void write_matrix(const fs::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << m.rows() << '\t' << m.cols() << '\n';
  char buf[64];
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof buf, m(r, c));
      if (c) out << '\t';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

Matrix read_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw DataError(path.string() + " line 1: bad shape header");
  Matrix m(rows, cols);
  std::string tok;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      if (!(in >> tok)) throw DataError(path.string() + ": truncated at row " + std::to_string(r));
      double v = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw DataError(path.string() + " line " + std::to_string(r + 2) + ": bad number '" + tok + "'");
      m(r, c) = v;
    }
  return m;
}

}  // namespace

std::vector<std::string> save_parameters(const Model& model, const fs::path& dir) {
  fs::create_directories(dir / "params");
  std::vector<std::string> masks;
  for (const Parameter* p : model.parameters()) {
    write_matrix(dir / "params" / (file_stem(p->name()) + ".tsv"), p->weight().value());
    if (p->masked()) {
      fs::create_directories(dir / "masks");
      const fs::path rel = fs::path("masks") / (file_stem(p->name()) + ".mask");
      std::ofstream out(dir / rel);
      if (!out) throw DataError("cannot write " + (dir / rel).string());
      write_mask(out, *p->mask());
      masks.push_back(rel.generic_string());
    }
  }
  return masks;
}

void load_parameters(Model& model, const fs::path& dir) {
  for (Parameter* p : model.parameters()) {
    Matrix m = read_matrix(dir / "params" / (file_stem(p->name()) + ".tsv"));
    const Matrix& cur = p->weight().value();
    if (m.rows() != cur.rows() || m.cols() != cur.cols())
      throw DataError("parameter " + p->name() + ": shape mismatch");
    if (p->masked()) {
      const fs::path path = dir / "masks" / (file_stem(p->name()) + ".mask");
      std::ifstream in(path);
      if (!in) throw DataError("cannot open " + path.string());
      const ExpanderMask mask = read_mask(in);
      if (!(mask == *p->mask())) throw DataError("parameter " + p->name() + ": mask differs");
      m = m.cwiseProduct(p->mask_matrix());
    }
    p->weight().mutable_value() = m;
  }
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

struct Row {
  std::vector<std::string> cells;
};

Row row_for(const json& doc) {
  // cv and sweep documents carry the run config in their first sub-report.
  const json* run = &doc;
  if (doc.contains("reports") && doc.at("reports").is_array() && !doc.at("reports").empty())
    run = &doc.at("reports").at(0);
  if (doc.contains("selected_index")) run = &doc.at("reports").at(doc.at("selected_index").get<std::size_t>());
  const json& cfg = run->at("config");
  std::string model = cfg.at("family").get<std::string>();
  std::string variant = cfg.at("variant").get<std::string>();
  if (cfg.contains("density") && !cfg.at("density").is_null())
    variant += " " + fixed(100.0 * cfg.at("density").get<double>(), 0) + "%";
  const std::string act = cfg.at("activation").get<std::string>();
  const std::string dataset = run->value("dataset", std::string());
  const bool mae = run->value("metric", std::string("accuracy")) == "mae";

  std::string score;
  if (doc.contains("test_mean")) {
    const double mean = doc.at("test_mean").get<double>();
    const double sd = doc.at("test_std").get<double>();
    score = mae ? fixed(mean, 3) + " ± " + fixed(sd, 3)
                : fixed(100.0 * mean, 2) + " ± " + fixed(100.0 * sd, 2);
  } else {
    const double v = run->at("test_metric").get<double>();
    score = mae ? fixed(v, 3) : fixed(100.0 * v, 2);
  }
  const json& params = run->at("params");
  const std::string count = std::to_string(params.at("total").get<long long>());
  const std::string ratio = fixed(params.at("ratio_vs_vanilla").get<double>(), 3);
  return {{dataset, model, variant, act, mae ? "" : score, mae ? score : "", count, ratio}};
}

}  // namespace

std::string render_table(const std::vector<json>& reports) {
  const std::vector<std::string> header{"Dataset", "Model",   "Variant", "Act.",
                                        "ACC.",    "MAE",     "Params.", "Ratio"};
  std::vector<Row> rows;
  for (const json& r : reports) {
    try {
      rows.push_back(row_for(r));
    } catch (const json::exception& e) {
      throw DataError(std::string("report document: ") + e.what());
    }
  }
  // Width in code points so "±" counts once.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s)
      if ((c & 0xC0) != 0x80) ++w;
    return w;
  };
  std::vector<std::size_t> w(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    w[c] = width(header[c]);
    for (const Row& r : rows) w[c] = std::max(w[c], width(r.cells[c]));
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) line += "  ";
      line += cells[c];
      line.append(w[c] - width(cells[c]), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  out << std::string(total + 2 * (w.size() - 1), '-') << '\n';
  for (const Row& r : rows) emit(r.cells);
  return out.str();
}

}  // namespace xgnn
