#pragma once

#include <string>
#include <vector>

#include "srec/harness/pipeline.hpp"
#include "srec/harness/sweep.hpp"

namespace srec::harness {

/// Raw records: header `variant,scheme,snr_db,eta,image,trial,psnr_db,byte_errors`,
/// one row per record, UTF-8, LF line endings, fixed 6-decimal reals.
void export_csv(const std::vector<RunRecord>& records, const std::string& path);

/// Per-point means: `variant,scheme,snr_db,eta,runs,mean_psnr_db,mean_byte_errors`.
void export_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path);

/// Re-parses a raw CSV written by export_csv.
std::vector<RunRecord> parse_csv(const std::string& path);

}  // namespace srec::harness
