#include "srec/harness/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace srec::harness {

namespace {

constexpr const char* kRawHeader = "variant,scheme,snr_db,eta,image,trial,psnr_db,byte_errors";

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void export_csv(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);  // binary: LF endings everywhere
    if (!os) throw std::runtime_error("export_csv: cannot open '" + path + "'");
    os << kRawHeader << "\n";
    for (const auto& r : records) {
        os << r.variant << ',' << r.scheme << ',' << fixed6(r.snr_db) << ',' << fixed6(r.eta) << ','
           << r.image_index << ',' << r.trial_index << ',' << fixed6(r.psnr_db) << ','
           << r.byte_error_count << "\n";
    }
    if (!os) throw std::runtime_error("export_csv: write failed for '" + path + "'");
}

void export_summary_csv(const std::vector<SummaryRow>& summary, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("export_summary_csv: cannot open '" + path + "'");
    os << "variant,scheme,snr_db,eta,runs,mean_psnr_db,mean_byte_errors\n";
    for (const auto& row : summary) {
        os << row.variant << ',' << row.scheme << ',' << fixed6(row.snr_db) << ',' << fixed6(row.eta)
           << ',' << row.runs << ',' << fixed6(row.mean_psnr_db) << ','
           << fixed6(row.mean_byte_errors) << "\n";
    }
    if (!os) throw std::runtime_error("export_summary_csv: write failed for '" + path + "'");
}

std::vector<RunRecord> parse_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("parse_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != kRawHeader)
        throw std::runtime_error("parse_csv: unexpected header in '" + path + "'");

    std::vector<RunRecord> records;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto fields = split_commas(line);
        if (fields.size() != 8) throw std::runtime_error("parse_csv: malformed row '" + line + "'");
        RunRecord r;
        r.variant = fields[0];
        r.scheme = fields[1];
        r.snr_db = std::stod(fields[2]);
        r.eta = std::stod(fields[3]);
        r.image_index = static_cast<std::size_t>(std::stoull(fields[4]));
        r.trial_index = static_cast<std::size_t>(std::stoull(fields[5]));
        r.psnr_db = std::stod(fields[6]);
        r.byte_error_count = static_cast<std::size_t>(std::stoull(fields[7]));
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace srec::harness
