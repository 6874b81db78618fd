#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srec/harness/pipeline.hpp"

namespace srec::harness {

/// Full experiment description. The sweep runs the cross product
/// (variant x scheme x snr x eta x image x trial); single-element grids
/// collapse an axis.
struct ExperimentConfig {
    std::vector<Variant> variants{Variant::Encrypted};
    std::vector<modem::Scheme> schemes{modem::Scheme::Qpsk};
    std::vector<double> snr_grid{10.0};
    std::vector<double> eta_grid{0.2};
    std::size_t crop = 64;
    std::size_t trials = 1;
    std::uint64_t master_seed = 1;
    std::size_t threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

/// Derives the per-point seed from the master seed and the point coordinates;
/// independent of execution order.
std::uint64_t point_seed(std::uint64_t master_seed, Variant variant, modem::Scheme scheme,
                         std::size_t snr_index, std::size_t eta_index, std::size_t image_index,
                         std::size_t trial_index);

struct SummaryRow {
    std::string variant;
    std::string scheme;
    double snr_db = 0;
    double eta = 0;
    std::size_t runs = 0;
    double mean_psnr_db = 0;
    double mean_byte_errors = 0;
};

struct SweepResult {
    std::vector<RunRecord> records;  // sorted by (variant, scheme, snr, eta, image, trial)
    std::vector<SummaryRow> summary;
};

/// Runs every point; failures are flagged per record (psnr = NaN plus the
/// error string) without aborting the sweep. Points execute concurrently;
/// the result is independent of scheduling.
SweepResult sweep(const ExperimentConfig& config, const PipelineModels& models,
                  const std::vector<numkit::Tensor<float>>& corpus, const cipher::KeySeed& key,
                  std::vector<RunOutput>* outputs = nullptr);

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

}  // namespace srec::harness
