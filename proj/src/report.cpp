#include "radmat/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "radmat/common.hpp"

namespace radmat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ReportError(msg);
}

// Three-stop blue ramp for heatmap cells, t in [0,1].
std::string heat_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto lerp = [](int a, int b, double u) {
        return static_cast<int>(a + (b - a) * u + 0.5);
    };
    int r, g, b;
    if (t < 0.5) {
        const double u = t / 0.5;
        r = lerp(247, 107, u);
        g = lerp(251, 174, u);
        b = lerp(255, 214, u);
    } else {
        const double u = (t - 0.5) / 0.5;
        r = lerp(107, 8, u);
        g = lerp(174, 48, u);
        b = lerp(214, 107, u);
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["condition"] = report.condition;
    j["n"] = report.n;
    j["confusion"] = nlohmann::ordered_json::array();
    for (const auto& row : report.confusion.counts) {
        j["confusion"].push_back(row);
    }
    j["per_class"] = nlohmann::ordered_json::array();
    for (const auto& s : report.per_class) {
        j["per_class"].push_back({{"precision", s.precision},
                                  {"recall", s.recall},
                                  {"f1", s.f1}});
    }
    j["macro_f1"] = report.macro_f1;
    j["confidence_bins"] = {
        {"edges", ConfidenceHistogram::edges()},
        {"correct", report.histogram.correct},
        {"incorrect", report.histogram.incorrect},
    };
    j["fingerprint"] = report.fingerprint;
    return j.dump(1) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ReportError("report is not valid JSON: " + std::string(e.what()));
    }
    EvalReport rep;
    try {
        rep.condition = j.at("condition").get<std::string>();
        rep.n = j.at("n").get<std::int64_t>();
        const auto& cm = j.at("confusion");
        require(cm.is_array() && cm.size() == kClasses, "report: confusion must be 5x5");
        for (int t = 0; t < kClasses; ++t) {
            require(cm[static_cast<std::size_t>(t)].size() == kClasses,
                    "report: confusion must be 5x5");
            for (int p = 0; p < kClasses; ++p) {
                rep.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] =
                    cm[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)].get<std::int64_t>();
            }
        }
        const auto& pc = j.at("per_class");
        require(pc.is_array() && pc.size() == kClasses, "report: per_class must have 5 entries");
        for (int c = 0; c < kClasses; ++c) {
            rep.per_class[static_cast<std::size_t>(c)].precision =
                pc[static_cast<std::size_t>(c)].at("precision").get<double>();
            rep.per_class[static_cast<std::size_t>(c)].recall =
                pc[static_cast<std::size_t>(c)].at("recall").get<double>();
            rep.per_class[static_cast<std::size_t>(c)].f1 =
                pc[static_cast<std::size_t>(c)].at("f1").get<double>();
        }
        rep.macro_f1 = j.at("macro_f1").get<double>();
        const auto& bins = j.at("confidence_bins");
        const auto correct = bins.at("correct").get<std::vector<std::int64_t>>();
        const auto incorrect = bins.at("incorrect").get<std::vector<std::int64_t>>();
        require(correct.size() == ConfidenceHistogram::kBins &&
                    incorrect.size() == ConfidenceHistogram::kBins,
                "report: confidence series must have 20 bins");
        std::copy(correct.begin(), correct.end(), rep.histogram.correct.begin());
        std::copy(incorrect.begin(), incorrect.end(), rep.histogram.incorrect.begin());
        rep.fingerprint = j.at("fingerprint").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ReportError("report: missing or malformed field: " + std::string(e.what()));
    }
    return rep;
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ReportError("cannot open report: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return report_from_json(buf.str());
}

std::string confusion_csv(const EvalReport& report, std::span<const std::string> class_names) {
    require(class_names.size() == kClasses, "confusion_csv: need 5 class names");
    std::ostringstream os;
    os << "true\\pred";
    for (const auto& n : class_names) os << ',' << n;
    os << '\n';
    for (int t = 0; t < kClasses; ++t) {
        os << class_names[static_cast<std::size_t>(t)];
        for (int p = 0; p < kClasses; ++p) {
            os << ',' << report.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        }
        os << '\n';
    }
    return os.str();
}

std::string confusion_svg(const EvalReport& report, std::span<const std::string> class_names) {
    require(class_names.size() == kClasses, "confusion_svg: need 5 class names");
    constexpr int cell = 64;
    constexpr int left = 110;
    constexpr int top = 70;
    const int width = left + kClasses * cell + 20;
    const int height = top + kClasses * cell + 30;

    std::int64_t row_max = 1;
    for (const auto& row : report.confusion.counts) {
        for (const auto c : row) row_max = std::max(row_max, c);
    }

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" font-family=\"monospace\" font-size=\"12\">\n";
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">confusion: " << report.condition
       << " (n=" << report.n << ", macro_f1=" << fmt_f(report.macro_f1, 4) << ")</text>\n";
    os << "<text x=\"" << left + kClasses * cell / 2 << "\" y=\"40\" text-anchor=\"middle\">"
       << "predicted</text>\n";
    for (int p = 0; p < kClasses; ++p) {
        os << "<text x=\"" << left + p * cell + cell / 2 << "\" y=\"" << top - 8
           << "\" text-anchor=\"middle\">" << class_names[static_cast<std::size_t>(p)] << "</text>\n";
    }
    for (int t = 0; t < kClasses; ++t) {
        os << "<text x=\"" << left - 8 << "\" y=\"" << top + t * cell + cell / 2 + 4
           << "\" text-anchor=\"end\">" << class_names[static_cast<std::size_t>(t)] << "</text>\n";
        for (int p = 0; p < kClasses; ++p) {
            const std::int64_t c =
                report.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
            const double frac = static_cast<double>(c) / static_cast<double>(row_max);
            os << "<rect x=\"" << left + p * cell << "\" y=\"" << top + t * cell << "\" width=\""
               << cell << "\" height=\"" << cell << "\" fill=\"" << heat_color(frac)
               << "\" stroke=\"#ffffff\"/>\n";
            os << "<text x=\"" << left + p * cell + cell / 2 << "\" y=\""
               << top + t * cell + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
               << (frac > 0.55 ? "#ffffff" : "#000000") << "\">" << c << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string confidence_svg(const EvalReport& report) {
    constexpr int bar_w = 26;
    constexpr int plot_h = 220;
    constexpr int left = 60;
    constexpr int top = 50;
    const int width = left + ConfidenceHistogram::kBins * bar_w + 30;
    const int height = top + plot_h + 60;

    std::int64_t peak = 1;
    for (int b = 0; b < ConfidenceHistogram::kBins; ++b) {
        peak = std::max(peak, report.histogram.correct[static_cast<std::size_t>(b)] +
                                  report.histogram.incorrect[static_cast<std::size_t>(b)]);
    }

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">confidence: " << report.condition
       << " (n=" << report.n << ")</text>\n";
    os << "<text x=\"" << left << "\" y=\"36\" fill=\"#2c7fb8\">correct</text>\n";
    os << "<text x=\"" << left + 70 << "\" y=\"36\" fill=\"#d95f0e\">incorrect</text>\n";
    // Stacked bars: incorrect drawn above correct.
    for (int b = 0; b < ConfidenceHistogram::kBins; ++b) {
        const std::int64_t good = report.histogram.correct[static_cast<std::size_t>(b)];
        const std::int64_t bad = report.histogram.incorrect[static_cast<std::size_t>(b)];
        const int good_h = static_cast<int>(plot_h * static_cast<double>(good) / static_cast<double>(peak) + 0.5);
        const int bad_h = static_cast<int>(plot_h * static_cast<double>(bad) / static_cast<double>(peak) + 0.5);
        const int x = left + b * bar_w;
        os << "<rect x=\"" << x << "\" y=\"" << top + plot_h - good_h << "\" width=\""
           << bar_w - 2 << "\" height=\"" << good_h << "\" fill=\"#2c7fb8\"/>\n";
        os << "<rect x=\"" << x << "\" y=\"" << top + plot_h - good_h - bad_h << "\" width=\""
           << bar_w - 2 << "\" height=\"" << bad_h << "\" fill=\"#d95f0e\"/>\n";
        if (b % 4 == 0) {
            os << "<text x=\"" << x << "\" y=\"" << top + plot_h + 16 << "\">"
               << fmt_f(static_cast<double>(b) / ConfidenceHistogram::kBins, 2) << "</text>\n";
        }
    }
    os << "<text x=\"" << left + ConfidenceHistogram::kBins * bar_w - 20 << "\" y=\""
       << top + plot_h + 16 << "\">1.00</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
       << left + ConfidenceHistogram::kBins * bar_w << "\" y2=\"" << top + plot_h
       << "\" stroke=\"#000000\"/>\n";
    os << "</svg>\n";
    return os.str();
}

std::string summary_csv(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << "condition,macro_f1,n\n";
    for (const auto& r : reports) {
        os << r.condition << ',' << fmt_f(r.macro_f1, 4) << ',' << r.n << '\n';
    }
    return os.str();
}

void render_reports(std::span<const EvalReport> reports,
                    std::span<const std::string> class_names,
                    const std::filesystem::path& out_dir) {
    require(!reports.empty(), "render_reports: nothing to render");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ReportError("cannot create output directory: " + out_dir.string());

    auto write_file = [&](const std::filesystem::path& p, const std::string& bytes) {
        std::ofstream os(p, std::ios::binary);
        if (!os) throw ReportError("cannot write " + p.string());
        os << bytes;
        if (!os) throw ReportError("failed writing " + p.string());
    };

    for (const auto& rep : reports) {
        const std::string base = rep.condition;
        write_file(out_dir / (base + ".report.json"), report_to_json(rep));
        write_file(out_dir / (base + ".confusion.csv"), confusion_csv(rep, class_names));
        write_file(out_dir / (base + ".confusion.svg"), confusion_svg(rep, class_names));
        write_file(out_dir / (base + ".confidence.svg"), confidence_svg(rep));
    }
    write_file(out_dir / "summary.csv", summary_csv(reports));
}

}  // namespace radmat
