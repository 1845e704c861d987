#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dsa/csv.hpp"
#include "dsa/error.hpp"
#include "dsa/histogram.hpp"
#include "dsa/sampler.hpp"

namespace dsa {

namespace batch_io_detail {

inline constexpr const char* kMarker = "# dsa batch v1";

inline void write_histogram_block(std::ostream& out, const char* name,
                                  const CountHistogram& hist) {
    out << "[" << name << "]\n";
    out << "lo = " << format_double(hist.lo()) << "\n";
    out << "hi = " << format_double(hist.hi()) << "\n";
    out << "bins = " << format_u64(hist.bins()) << "\n";
    out << "underflow = " << format_u64(hist.underflow()) << "\n";
    out << "overflow = " << format_u64(hist.overflow()) << "\n";
    out << "counts = ";
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        if (i) out << ',';
        out << format_u64(hist.count(i));
    }
    out << "\n";
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = text.find(sep, pos);
        if (next == std::string_view::npos) {
            parts.push_back(text.substr(pos));
            return parts;
        }
        parts.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
}

struct Section {
    std::map<std::string, std::string> entries;

    const std::string& need(const std::string& key) const {
        const auto it = entries.find(key);
        if (it == entries.end())
            raise(ErrorKind::parse, "batch file is missing key '" + key + "'");
        return it->second;
    }
    double number(const std::string& key) const { return parse_double(need(key), key); }
    std::uint64_t unsigned_number(const std::string& key) const {
        return parse_u64(need(key), key);
    }
};

inline CountHistogram read_histogram_block(const Section& section) {
    CountHistogram hist(section.number("lo"), section.number("hi"),
                        section.unsigned_number("bins"));
    const auto counts = split(section.need("counts"), ',');
    if (counts.size() != hist.bins())
        raise(ErrorKind::parse, "histogram count list length does not match bins");
    for (std::size_t i = 0; i < hist.bins(); ++i)
        hist.count(i) = parse_u64(counts[i], "counts");
    hist.underflow() = section.unsigned_number("underflow");
    hist.overflow() = section.unsigned_number("overflow");
    return hist;
}

} // namespace batch_io_detail

/// Self-describing text form of a batch: generation config, seed list,
/// sufficient statistics, optional histogram blocks. Numbers are written
/// in shortest round-trip form, so save/load is lossless.
inline void save_batch(std::ostream& out, const SampleBatch& batch) {
    using batch_io_detail::kMarker;
    out << kMarker << "\n";
    out << "B = " << format_double(batch.pps.weight_diff) << "\n";
    out << "theta = " << format_double(batch.pps.theta) << "\n";
    out << "d = " << format_double(batch.meter.shift) << "\n";
    out << "sigma = " << format_double(batch.meter.width) << "\n";
    out << "offset = " << format_double(batch.imperfection.offset) << "\n";
    out << "background = " << format_u64(batch.imperfection.background_per_channel) << "\n";
    if (batch.imperfection.background_window) {
        out << "background_window = "
            << format_double(batch.imperfection.background_window->first) << ","
            << format_double(batch.imperfection.background_window->second) << "\n";
    }
    out << "histograms = " << (batch.with_histograms ? "true" : "false") << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < batch.seeds.size(); ++i) {
        if (i) out << ',';
        out << format_u64(batch.seeds[i]);
    }
    out << "\n";
    out << "n_total = " << format_u64(batch.n_total) << "\n";
    out << "n1 = " << format_u64(batch.n1) << "\n";
    out << "n2 = " << format_u64(batch.n2) << "\n";
    out << "background_injected = " << format_u64(batch.background_per_channel) << "\n";
    out << "sum1 = " << format_double(batch.sum1) << "\n";
    out << "sumsq1 = " << format_double(batch.sumsq1) << "\n";
    out << "sum2 = " << format_double(batch.sum2) << "\n";
    out << "sumsq2 = " << format_double(batch.sumsq2) << "\n";
    if (batch.hist1) batch_io_detail::write_histogram_block(out, "hist1", *batch.hist1);
    if (batch.hist2) batch_io_detail::write_histogram_block(out, "hist2", *batch.hist2);
}

inline void save_batch(const std::filesystem::path& path, const SampleBatch& batch) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::io, "cannot open " + path.string() + " for writing");
    save_batch(out, batch);
    if (!out) raise(ErrorKind::io, "failed writing " + path.string());
}

inline SampleBatch load_batch(std::istream& in) {
    using batch_io_detail::Section;
    std::string line;
    if (!std::getline(in, line) || line != batch_io_detail::kMarker)
        raise(ErrorKind::parse, "not a dsa batch file (missing version marker)");

    Section main;
    std::map<std::string, Section> blocks;
    Section* current = &main;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        if (view.front() == '[') {
            if (view.back() != ']')
                raise(ErrorKind::parse, "malformed section header '" + line + "'");
            current = &blocks[std::string(view.substr(1, view.size() - 2))];
            continue;
        }
        const std::size_t eq = view.find('=');
        if (eq == std::string_view::npos)
            raise(ErrorKind::parse, "expected 'key = value' in batch file, got '" + line + "'");
        const std::string key{trim(view.substr(0, eq))};
        const std::string value{trim(view.substr(eq + 1))};
        current->entries[key] = value;
    }

    const PpsConfig pps =
        PpsConfig::from_weight_diff(main.number("B"), main.number("theta"));
    const MeterConfig meter = MeterConfig::from_shift(main.number("d"), main.number("sigma"));
    Imperfection imperfection;
    imperfection.offset = main.number("offset");
    imperfection.background_per_channel = main.unsigned_number("background");
    if (main.entries.count("background_window")) {
        const auto parts = batch_io_detail::split(main.need("background_window"), ',');
        if (parts.size() != 2)
            raise(ErrorKind::parse, "background_window expects 'lo,hi'");
        imperfection.background_window = {parse_double(parts[0], "background_window"),
                                          parse_double(parts[1], "background_window")};
    }
    const bool histograms = main.need("histograms") == "true";

    SampleBatch batch{};
    batch.pps = pps;
    batch.meter = meter;
    batch.imperfection = imperfection;
    batch.with_histograms = histograms;
    for (const auto seed_text : batch_io_detail::split(main.need("seeds"), ','))
        if (!seed_text.empty()) batch.seeds.push_back(parse_u64(seed_text, "seeds"));
    batch.n_total = main.unsigned_number("n_total");
    batch.n1 = main.unsigned_number("n1");
    batch.n2 = main.unsigned_number("n2");
    batch.background_per_channel = main.unsigned_number("background_injected");
    batch.sum1 = main.number("sum1");
    batch.sumsq1 = main.number("sumsq1");
    batch.sum2 = main.number("sum2");
    batch.sumsq2 = main.number("sumsq2");
    if (histograms) {
        if (!blocks.count("hist1") || !blocks.count("hist2"))
            raise(ErrorKind::parse, "batch file promises histograms but lacks the blocks");
        batch.hist1 = batch_io_detail::read_histogram_block(blocks.at("hist1"));
        batch.hist2 = batch_io_detail::read_histogram_block(blocks.at("hist2"));
    }
    return batch;
}

inline SampleBatch load_batch(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    return load_batch(in);
}

/// Histogram CSV exchange format: metadata comments, then
/// bin_lo,bin_hi,count rows for each bin in order.
inline void write_histogram_csv(std::ostream& out, const CountHistogram& hist,
                                const std::string& label) {
    CsvWriter writer(out);
    writer.comment("content", label);
    writer.comment("underflow", format_u64(hist.underflow()));
    writer.comment("overflow", format_u64(hist.overflow()));
    writer.header({"bin_lo", "bin_hi", "count"});
    for (std::size_t i = 0; i < hist.bins(); ++i)
        writer.row_of_strings({format_double(hist.bin_lo(i)), format_double(hist.bin_hi(i)),
                               format_u64(hist.count(i))});
}

inline CountHistogram read_histogram_csv(std::istream& in) {
    std::string line;
    std::vector<double> los, his;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow = 0, overflow = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        std::string_view view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            const std::size_t eq = view.find('=');
            if (eq != std::string_view::npos) {
                const std::string key{trim(view.substr(1, eq - 1))};
                const std::string value{trim(view.substr(eq + 1))};
                if (key == "underflow") underflow = parse_u64(value, key);
                if (key == "overflow") overflow = parse_u64(value, key);
            }
            continue;
        }
        if (!header_seen) { // header row
            header_seen = true;
            continue;
        }
        const auto parts = batch_io_detail::split(view, ',');
        if (parts.size() != 3)
            raise(ErrorKind::parse, "histogram CSV rows need bin_lo,bin_hi,count");
        los.push_back(parse_double(parts[0], "bin_lo"));
        his.push_back(parse_double(parts[1], "bin_hi"));
        counts.push_back(parse_u64(parts[2], "count"));
    }
    if (counts.empty()) raise(ErrorKind::parse, "histogram CSV has no bins");
    CountHistogram hist(los.front(), his.back(), counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) hist.count(i) = counts[i];
    hist.underflow() = underflow;
    hist.overflow() = overflow;
    return hist;
}

inline CountHistogram read_histogram_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::io, "cannot open " + path.string());
    return read_histogram_csv(in);
}

} // namespace dsa
