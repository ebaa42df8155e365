#include "massopt/field_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "massopt/error.hpp"

namespace massopt {

namespace {

constexpr const char* kGridPrefix = "# grid: ";

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path);
  return in;
}

Grid read_grid_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kGridPrefix, 0) != 0)
    throw Error(ErrorCode::io_error, path + ": missing '# grid:' header");
  return Grid::from_description(line.substr(std::string(kGridPrefix).size()));
}

std::vector<double> split_numbers(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell == "+inf" || cell == "inf") out.push_back(kInf);
    else out.push_back(std::stod(cell));
  }
  return out;
}

// Reads the last column of every data row.
std::vector<double> read_last_column(std::istream& in, const std::string& path) {
  std::string line;
  std::getline(in, line);  // column header
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(split_numbers(line).back());
    } catch (const std::exception&) {
      throw Error(ErrorCode::io_error, path + ": malformed row \"" + line + "\"");
    }
  }
  return out;
}

void write_coords(std::ostream& out, const Grid& g, const Point& p) {
  out << format_double(p[0]);
  if (g.kind() == GridKind::rectangle) out << ',' << format_double(p[1]);
}

std::string coord_header(const Grid& g) { return g.kind() == GridKind::rectangle ? "x,y" : (g.kind() == GridKind::radial ? "r" : "x"); }

} // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(const std::string& path, const Grid& g, const ScalarField& u) {
  auto out = open_out(path);
  out << kGridPrefix << g.describe() << '\n' << coord_header(g) << ",value\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    write_coords(out, g, g.node(i));
    out << ',' << format_double(u[i]) << '\n';
  }
}

ScalarField read_field_csv(const std::string& path, Grid* grid_out) {
  auto in = open_in(path);
  Grid g = read_grid_line(in, path);
  ScalarField u{read_last_column(in, path)};
  if (u.size() != g.node_count()) throw Error(ErrorCode::io_error, path + ": row count does not match the grid");
  if (grid_out) *grid_out = std::move(g);
  return u;
}

void write_vector_csv(const std::string& path, const Grid& g, const VectorField& v) {
  auto out = open_out(path);
  out << kGridPrefix << g.describe() << '\n' << coord_header(g);
  out << (v.components == 2 ? ",gx,gy\n" : ",g\n");
  for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
    write_coords(out, g, g.quadrature_point(q));
    for (double c : v.at(q)) out << ',' << format_double(c);
    out << '\n';
  }
}

void write_measure(const std::string& csv_path, const std::string& json_path, const Grid& g,
                   const DiscreteMeasure& mu) {
  {
    auto out = open_out(csv_path);
    out << kGridPrefix << g.describe() << '\n' << coord_header(g) << ",weight,density\n";
    for (std::size_t q = 0; q < g.quadrature_count(); ++q) {
      write_coords(out, g, g.quadrature_point(q));
      out << ',' << format_double(g.quadrature_weight(q)) << ',' << format_double(mu.density[q]) << '\n';
    }
  }
  nlohmann::ordered_json j;
  j["grid"] = g.describe();
  j["boundary_mass"] = mu.boundary_mass;
  j["atoms"] = nlohmann::ordered_json::array();
  for (const Atom& a : mu.atoms) j["atoms"].push_back({{"x", a.location[0]}, {"y", a.location[1]}, {"mass", a.mass}});
  auto out = open_out(json_path);
  out << j.dump(2) << '\n';
}

DiscreteMeasure read_measure(const std::string& csv_path, const std::string& json_path, Grid* grid_out) {
  auto in = open_in(csv_path);
  Grid g = read_grid_line(in, csv_path);
  DiscreteMeasure mu;
  mu.density = read_last_column(in, csv_path);
  if (mu.density.size() != g.quadrature_count())
    throw Error(ErrorCode::io_error, csv_path + ": row count does not match the grid");
  auto jin = open_in(json_path);
  try {
    const auto j = nlohmann::json::parse(jin);
    if (j.at("grid").get<std::string>() != g.describe())
      throw Error(ErrorCode::io_error, json_path + ": grid differs from " + csv_path);
    mu.boundary_mass = j.at("boundary_mass").get<double>();
    for (const auto& a : j.at("atoms"))
      mu.atoms.push_back({{a.at("x").get<double>(), a.at("y").get<double>()}, a.at("mass").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io_error, json_path + ": " + e.what());
  }
  if (grid_out) *grid_out = std::move(g);
  return mu;
}

} // namespace massopt
