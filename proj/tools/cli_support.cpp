#include "cli_support.hpp"

#include "raln/error.hpp"
#include "raln/parallel.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#ifndef RALN_VERSION
#define RALN_VERSION "unknown"
#endif

namespace raln::cli {

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty())
        throw Error(Errc::InvalidArgument, "bad number '" + s + "' in " + what);
    return v;
}

long long to_integer(const std::string& s, const std::string& what) {
    long long v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty())
        throw Error(Errc::InvalidArgument, "bad integer '" + s + "' in " + what);
    return v;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::Io, "cannot write " + path.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(Errc::Io, "short write to " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(Errc::Io, "cannot move output into place: " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(Errc::Io, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

fs::path sibling(const fs::path& path, const std::string& ext) {
    fs::path p = path;
    p.replace_extension(ext);
    return p;
}

CsvTable::CsvTable(std::string subcommand, std::vector<std::string> columns)
    : subcommand_(std::move(subcommand)), columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw Error(Errc::ShapeMismatch, "row width differs from header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::string out = "# raln-csv v1 " + subcommand_ + "\n";
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out;
}

std::string fmt(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string fmt(long long value) { return std::to_string(value); }

Manifest::Manifest(std::string subcommand) : subcommand_(std::move(subcommand)), started_(utc_now()) {}

void Manifest::add_input(const fs::path& path) {
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(read_file(path))}});
}

void Manifest::write_output(const fs::path& path, const std::string& bytes) {
    atomic_write(path, bytes);
    outputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(bytes)}});
}

void Manifest::finish(const fs::path& primary) {
    Json m;
    m["subcommand"] = subcommand_;
    m["tool_version"] = RALN_VERSION;
    m["config"] = config_;
    m["seeds"] = seeds_;
    m["threads"] = thread_budget();
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["started_at"] = started_;
    m["finished_at"] = utc_now();
    fs::path path = primary;
    path += ".manifest.json";
    atomic_write(path, m.dump(2) + "\n");
}

Dataset load_dataset(const DataSource& source) {
    if (!fs::exists(source.path)) throw Error(Errc::Io, "no such file: " + source.path.string());
    if (source.path.extension() == ".csv") return load_csv(source.path, source.label_column, source.has_header);
    return load_container(source.path);
}

std::vector<double> parse_doubles(const std::string& list) {
    std::vector<double> out;
    for (const auto& part : split(list, ',')) out.push_back(to_double(part, list));
    if (out.empty()) throw Error(Errc::InvalidArgument, "empty list");
    return out;
}

std::vector<Index> parse_indices(const std::string& list) {
    std::vector<Index> out;
    for (const auto& part : split(list, ',')) {
        const long long v = to_integer(part, list);
        if (v < 1) throw Error(Errc::InvalidArgument, "latent sizes must be positive: " + list);
        out.push_back(static_cast<Index>(v));
    }
    if (out.empty()) throw Error(Errc::InvalidArgument, "empty list");
    return out;
}

NoiseModel parse_noise(const std::string& text, const std::optional<ImageGeometry>& geometry) {
    const auto parts = split(text, ':');
    const std::string& kind = parts.front();
    if (kind == "gaussian" && parts.size() == 2) return AdditiveGaussian{to_double(parts[1], text)};
    if (kind == "dropout" && parts.size() == 2) return PixelDropout{to_double(parts[1], text)};
    if (kind == "mask" && parts.size() == 4) {
        if (!geometry) throw Error(Errc::GeometryMismatch, "mask noise needs a dataset with image geometry");
        const long long ph = to_integer(parts[2], text), pw = to_integer(parts[3], text);
        if (ph < 1 || pw < 1) throw Error(Errc::InvalidArgument, "patch sides must be positive: " + text);
        return PatchMask{to_double(parts[1], text), static_cast<std::uint32_t>(ph), static_cast<std::uint32_t>(pw),
                         *geometry};
    }
    throw Error(Errc::InvalidArgument, "unknown noise '" + text + "' (gaussian:σ, dropout:p, mask:p:ph:pw)");
}

Architecture parse_architecture(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.front() == "linear" && parts.size() == 2) {
        const long long k = to_integer(parts[1], text);
        if (k < 1) throw Error(Errc::InvalidArgument, "linear width must be positive");
        return LinearArch{static_cast<Index>(k)};
    }
    if (parts.front() == "mlp" && (parts.size() == 2 || parts.size() == 3)) {
        MlpArch arch{parse_indices(parts[1]), Activation::Tanh};
        if (parts.size() == 3) {
            if (parts[2] == "relu") arch.activation = Activation::Relu;
            else if (parts[2] != "tanh") throw Error(Errc::InvalidArgument, "unknown activation " + parts[2]);
        }
        return arch;
    }
    throw Error(Errc::InvalidArgument, "unknown architecture '" + text + "' (linear:K, mlp:W1,W2[:tanh|relu])");
}

std::string describe(const Architecture& arch) {
    if (const auto* l = std::get_if<LinearArch>(&arch)) return "linear:" + std::to_string(l->k);
    const auto& m = std::get<MlpArch>(arch);
    std::string s = "mlp:";
    for (std::size_t i = 0; i < m.widths.size(); ++i) s += (i ? "," : "") + std::to_string(m.widths[i]);
    return s + (m.activation == Activation::Tanh ? ":tanh" : ":relu");
}

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "gd") return OptimizerKind::GradientDescent;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "lbfgs") return OptimizerKind::Lbfgs;
    throw Error(Errc::InvalidArgument, "unknown optimizer " + name);
}

std::string describe(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::GradientDescent: return "gd";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::Lbfgs: return "lbfgs";
    }
    return "?";
}

SyntheticSpec parse_synthetic_spec(const Json& j) {
    auto bad = [](const std::string& msg) { return Error(Errc::InvalidSpec, msg); };
    auto check_keys = [&](const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
        if (!obj.is_object()) throw bad(where + " must be an object");
        for (const auto& [key, value] : obj.items()) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                throw bad("unknown key '" + key + "' in " + where);
        }
    };
    try {
        check_keys(j, {"d", "n", "c", "seed", "spectrum", "signal", "basis", "geometry", "name"}, "spec");
        SyntheticSpec s;
        s.d = j.at("d").get<Index>();
        s.n = j.at("n").get<Index>();
        s.c = j.value("c", Index{2});
        s.seed = j.value("seed", std::uint64_t{0});
        s.name = j.value("name", std::string("synthetic"));

        const Json& sp = j.at("spectrum");
        const std::string type = sp.at("type").get<std::string>();
        if (type == "exponential") {
            check_keys(sp, {"type", "decay_rate"}, "spectrum");
            s.spectrum = ExponentialSpectrum{sp.at("decay_rate").get<double>()};
        } else if (type == "power_law") {
            check_keys(sp, {"type", "exponent"}, "spectrum");
            s.spectrum = PowerLawSpectrum{sp.at("exponent").get<double>()};
        } else if (type == "explicit") {
            check_keys(sp, {"type", "values"}, "spectrum");
            s.spectrum = ExplicitSpectrum{sp.at("values").get<std::vector<double>>()};
        } else {
            throw bad("unknown spectrum type " + type);
        }

        if (j.contains("signal")) {
            const Json& sg = j.at("signal");
            const std::string st = sg.at("type").get<std::string>();
            if (st == "none") {
                check_keys(sg, {"type"}, "signal");
            } else if (st == "bottom_k" || st == "top_k") {
                check_keys(sg, {"type", "k", "snr"}, "signal");
                const Index k = sg.at("k").get<Index>();
                const double snr = sg.at("snr").get<double>();
                if (st == "bottom_k") s.signal = BottomSignal{k, snr};
                else s.signal = TopSignal{k, snr};
            } else {
                throw bad("unknown signal type " + st);
            }
        }
        if (j.contains("basis")) {
            const Json& b = j.at("basis");
            const std::string bt = b.at("type").get<std::string>();
            if (bt == "random") {
                check_keys(b, {"type"}, "basis");
            } else if (bt == "axis_top") {
                check_keys(b, {"type", "m"}, "basis");
                s.basis = AxisTopBasis{b.at("m").get<Index>()};
            } else {
                throw bad("unknown basis type " + bt);
            }
        }
        if (j.contains("geometry")) {
            const Json& g = j.at("geometry");
            check_keys(g, {"height", "width", "channels"}, "geometry");
            s.geometry = ImageGeometry{g.at("height").get<std::uint32_t>(), g.at("width").get<std::uint32_t>(),
                                       g.value("channels", std::uint32_t{1})};
        }
        validate_spec(s);
        return s;
    } catch (const Json::exception& e) {
        throw bad(e.what());
    }
}

Json synthetic_spec_json(const SyntheticSpec& s) {
    Json j;
    j["d"] = s.d;
    j["n"] = s.n;
    j["c"] = s.c;
    j["seed"] = s.seed;
    j["name"] = s.name;
    std::visit(
        [&j](const auto& sp) {
            using T = std::decay_t<decltype(sp)>;
            if constexpr (std::is_same_v<T, ExponentialSpectrum>)
                j["spectrum"] = {{"type", "exponential"}, {"decay_rate", sp.decay_rate}};
            else if constexpr (std::is_same_v<T, PowerLawSpectrum>)
                j["spectrum"] = {{"type", "power_law"}, {"exponent", sp.exponent}};
            else
                j["spectrum"] = {{"type", "explicit"}, {"values", sp.values}};
        },
        s.spectrum);
    std::visit(
        [&j](const auto& sg) {
            using T = std::decay_t<decltype(sg)>;
            if constexpr (std::is_same_v<T, NoSignal>)
                j["signal"] = {{"type", "none"}};
            else
                j["signal"] = {{"type", std::is_same_v<T, BottomSignal> ? "bottom_k" : "top_k"},
                               {"k", sg.k},
                               {"snr", sg.snr}};
        },
        s.signal);
    if (const auto* a = std::get_if<AxisTopBasis>(&s.basis)) j["basis"] = {{"type", "axis_top"}, {"m", a->m}};
    else j["basis"] = {{"type", "random"}};
    if (s.geometry)
        j["geometry"] = {{"height", s.geometry->height}, {"width", s.geometry->width},
                         {"channels", s.geometry->channels}};
    return j;
}

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
    constexpr double width = 720, height = 440, left = 70, right = 170, top = 40, bottom = 55;
    constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                       "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double pw = width - left - right, ph = height - top - bottom;

    auto ty = [&](double y) { return options.log_y ? std::log10(y) : y; };
    auto usable = [&](double y) { return std::isfinite(y) && (!options.log_y || y > 0); };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        for (std::size_t i = 0; i < ser.y.size(); ++i) {
            if (!usable(ser.y[i])) continue;
            const double x = options.bars ? static_cast<double>(s) : ser.x[i];
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, ty(ser.y[i]));
            y1 = std::max(y1, ty(ser.y[i]));
            if (options.bars) break;
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (options.bars) {
        x0 -= 0.5;
        x1 += 0.5;
        if (!options.log_y) y0 = std::min(y0, 0.0);
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph; };
    auto py_raw = [&](double t) { return top + (1.0 - (t - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(options.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int t = 0; t <= 4; ++t) {
        const double ty_val = y0 + (y1 - y0) * t / 4.0;
        const double yy = py_raw(ty_val);
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << yy << "\" y2=\"" << yy
          << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">"
          << short_num(options.log_y ? std::pow(10.0, ty_val) : ty_val) << "</text>\n";
        if (!options.bars) {
            const double xv = x0 + (x1 - x0) * t / 4.0;
            o << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
              << short_num(xv) << "</text>\n";
        }
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
      << escape_xml(options.x_label) << "</text>\n";
    o << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(options.y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& ser = series[s];
        const char* color = palette[s % std::size(palette)];
        if (options.bars) {
            if (ser.y.empty() || !usable(ser.y.front())) continue;
            const double base = options.log_y ? top + ph : py_raw(std::max(y0, 0.0));
            const double yy = py(ser.y.front());
            const double bw = 0.6 * pw / (x1 - x0);
            o << "<rect x=\"" << px(static_cast<double>(s)) - bw / 2 << "\" y=\"" << std::min(yy, base)
              << "\" width=\"" << bw << "\" height=\"" << std::abs(base - yy) << "\" fill=\"" << color << "\"/>\n";
            o << "<text x=\"" << px(static_cast<double>(s)) << "\" y=\"" << top + ph + 18
              << "\" text-anchor=\"middle\">" << escape_xml(ser.label) << "</text>\n";
            continue;
        }
        std::ostringstream pts;
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
            if (!usable(ser.y[i])) continue;
            pts << px(ser.x[i]) << ',' << py(ser.y[i]) << ' ';
        }
        o << "<polyline fill=\"none\" stroke-width=\"1.6\" stroke=\"" << color << "\" points=\"" << pts.str()
          << "\"/>\n";
        const double ly = top + 14 + 16.0 * static_cast<double>(s);
        o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << ly - 4 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << escape_xml(ser.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace raln::cli
