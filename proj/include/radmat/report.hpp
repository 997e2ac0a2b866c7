#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radmat/metrics.hpp"

namespace radmat {

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Serialized report schema:
// {condition, n, confusion, per_class, macro_f1, confidence_bins, fingerprint}
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
EvalReport load_report(const std::filesystem::path& path);

std::string confusion_csv(const EvalReport& report, std::span<const std::string> class_names);
std::string confusion_svg(const EvalReport& report, std::span<const std::string> class_names);
std::string confidence_svg(const EvalReport& report);
std::string summary_csv(std::span<const EvalReport> reports);

// Writes <condition>.report.json / .confusion.csv / .confusion.svg /
// .confidence.svg per report plus summary.csv. Output bytes depend only on
// the report contents.
void render_reports(std::span<const EvalReport> reports,
                    std::span<const std::string> class_names,
                    const std::filesystem::path& out_dir);

}  // namespace radmat
