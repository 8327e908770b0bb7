#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnn/estimate.hpp"
#include "nnn/spatial_index.hpp"
#include "nnn/training.hpp"

namespace nnn::io {

// All text output uses LF line endings and shortest round-trip decimal numbers.

/// Well file: header `id,x,y,value`, ids 0..N-1 in order. Throws parse_error naming the line.
sample_set read_wells(std::istream& in);
sample_set read_wells(const std::filesystem::path& path);
void write_wells(std::ostream& out, const sample_set& samples);

/// Surface file: header `x,y,value`, one row per cell center in row-major order.
void write_surface_csv(std::ostream& out, const grid_spec& grid, const std::vector<double>& values);

/// Binary 8-bit PGM (P5). Gray = round(255 * (v - min) / (max - min)); the min and max are
/// recorded in a header comment. The first image row is the grid row with the largest y.
void write_pgm(std::ostream& out, const grid_spec& grid, const std::vector<double>& values);

/// Model snapshot: layer sizes, row-major weights and biases, noise sigma, normalizer, m, seed.
std::string model_to_json(const trained_model& trained);
trained_model model_from_json(const std::string& text);  // throws parse_error

std::string train_report_to_json(const train_report& report);
std::string cv_report_to_json(const cv_report& report);

/// Loss curve: `epoch,loss,val_error`; val_error is empty on epochs without a validation check.
void write_loss_csv(std::ostream& out, const train_report& report);

// File helpers; throw io_error.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace nnn::io
