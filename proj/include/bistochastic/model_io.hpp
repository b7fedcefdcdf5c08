#pragma once

#include "bistochastic/embedding.hpp"
#include "bistochastic/spectral.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace bistochastic {

inline constexpr int kModelFormatVersion = 1;

/// A persisted model plus the embedding settings it was saved with.
struct StoredModel {
  SpectralModel model;
  Index components = 0;
  double time = 0.0;
};

/// Writes a model directory:
///   metadata.txt           key=value lines
///   reference.csv          n x d reference coordinates (gaussian models)
///   reference_density.csv  omega, one per line
///   eigenvalues.csv        retained eigenvalues, one per line
///   eigenvectors.csv       n x r
/// Numbers carry 17 significant digits. Creates the directory if needed.
void save_model(const std::filesystem::path& dir, const SpectralModel& model,
                Index components, double time);

StoredModel load_model(const std::filesystem::path& dir);

std::map<std::string, std::string> read_metadata(std::istream& in);

/// Embedding rows, one per point. With `header`, a '#'-prefixed line records
/// t and the eigenvalues, followed by a psi_2..psi_{K+1} column header.
void write_embedding(std::ostream& out, const DiffusionEmbedding& embedding,
                     bool header = false, char delimiter = ',');

}  // namespace bistochastic
