#pragma once

#include <string>

#include "massopt/grid.hpp"

namespace massopt {

// CSV files start with "# grid: <Grid::describe()>" followed by a column
// header. Numbers are written with 17 significant digits so that a write/read
// cycle is exact.

void write_field_csv(const std::string& path, const Grid& g, const ScalarField& u);
ScalarField read_field_csv(const std::string& path, Grid* grid_out = nullptr);

void write_vector_csv(const std::string& path, const Grid& g, const VectorField& v);

/// Density per quadrature point as CSV plus a JSON sidecar with the atoms and
/// the boundary mass.
void write_measure(const std::string& csv_path, const std::string& json_path, const Grid& g,
                   const DiscreteMeasure& mu);
DiscreteMeasure read_measure(const std::string& csv_path, const std::string& json_path,
                             Grid* grid_out = nullptr);

std::string format_double(double v);

} // namespace massopt
