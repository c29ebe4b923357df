#include "redolab/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace redolab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string opt_str(const std::optional<double>& v) {
    return v.has_value() ? format_double(*v) : "";
}

}  // namespace

void write_metric_csv(const MetricSeries& series, const std::string& dir) {
    ensure_dir(dir);
    {
        std::ostringstream out;
        out << "step_env,step_grad,episode,return,loss,dormant_frac_tau0,dormant_frac_tau,"
               "recycled_count,seed\n";
        for (const auto& r : series.rows)
            out << r.step_env << "," << r.step_grad << "," << r.episode << ","
                << format_double(r.ret) << "," << format_double(r.loss) << ","
                << format_double(r.dormant_frac_tau0) << "," << format_double(r.dormant_frac_tau)
                << "," << r.recycled_count << "," << r.seed << "\n";
        write_text_file(dir + "/metrics.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "step_grad,layer,tau,dormant_count,layer_size,dormant_fraction,overlap\n";
        for (const auto& r : series.dormancy)
            out << r.step_grad << "," << r.layer << "," << format_double(r.tau) << ","
                << r.dormant_count << "," << r.layer_size << ","
                << format_double(r.dormant_fraction) << "," << opt_str(r.overlap) << "\n";
        write_text_file(dir + "/dormancy.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "step_grad,tau,overlap_union,overlap_first\n";
        for (const auto& r : series.overlap)
            out << r.step_grad << "," << format_double(r.tau) << "," << opt_str(r.vs_union) << ","
                << opt_str(r.vs_first) << "\n";
        write_text_file(dir + "/overlap.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "step_grad,layer,n_recycled,strategy,tau_or_fraction\n";
        for (const auto& r : series.recycle_events)
            out << r.step_grad << "," << r.layer << "," << r.n_recycled << "," << r.strategy << ","
                << format_double(r.tau_or_fraction) << "\n";
        write_text_file(dir + "/recycle_events.csv", out.str());
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

LoadedRun load_metric_csv(const std::string& dir) {
    LoadedRun run;
    {
        std::ifstream in(dir + "/metrics.csv");
        if (!in) throw std::runtime_error("cannot open " + dir + "/metrics.csv");
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto c = split_csv_line(line);
            if (c.size() != 9) throw std::runtime_error("bad metrics row in " + dir);
            MetricRow r;
            r.step_env = std::stoull(c[0]);
            r.step_grad = std::stoull(c[1]);
            r.episode = std::stoull(c[2]);
            r.ret = std::stod(c[3]);
            r.loss = std::stod(c[4]);
            r.dormant_frac_tau0 = std::stod(c[5]);
            r.dormant_frac_tau = std::stod(c[6]);
            r.recycled_count = std::stoull(c[7]);
            r.seed = std::stoull(c[8]);
            run.rows.push_back(r);
        }
    }
    {
        std::ifstream in(dir + "/dormancy.csv");
        if (!in) throw std::runtime_error("cannot open " + dir + "/dormancy.csv");
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto c = split_csv_line(line);
            if (c.size() != 7) throw std::runtime_error("bad dormancy row in " + dir);
            DormancyRow r;
            r.step_grad = std::stoull(c[0]);
            r.layer = std::stoull(c[1]);
            r.tau = std::stod(c[2]);
            r.dormant_count = std::stoull(c[3]);
            r.layer_size = std::stoull(c[4]);
            r.dormant_fraction = std::stod(c[5]);
            if (!c[6].empty()) r.overlap = std::stod(c[6]);
            run.dormancy.push_back(r);
        }
    }
    return run;
}

}  // namespace redolab
