#include "raln/data.hpp"

#include "raln/error.hpp"
#include "raln/random.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace raln {

namespace {

constexpr char kMagic[4] = {'R', 'A', 'L', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagGeometry = 1U;
constexpr std::uint32_t kFlagCentered = 2U;

// Stream identifiers for counter_rng, one per independent random component.
enum Stream : std::uint64_t { kBasis = 0, kLatent = 1, kLabels = 2, kOffsets = 3 };

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t{static_cast<unsigned char>(bytes_[pos_ + i])} << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float f;
        std::memcpy(&f, &bits, sizeof f);
        return f;
    }

    void need(std::size_t count, const char* what) const {
        if (bytes_.size() - pos_ < count)
            throw Error(Errc::TruncatedFile, std::string("file ends inside ") + what);
    }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(Errc::Io, "read failed for " + path.string());
    return buf.str();
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

}  // namespace

void Dataset::validate() const {
    if (labels.size() != static_cast<std::size_t>(x.cols()))
        throw Error(Errc::ShapeMismatch, "label count differs from sample count");
    for (std::uint32_t l : labels)
        if (l >= num_classes) throw Error(Errc::IndexOutOfRange, "label index exceeds class count");
    if (meta.geometry && meta.geometry->size() != static_cast<std::uint64_t>(x.rows())) {
        std::ostringstream msg;
        msg << "geometry " << meta.geometry->height << "x" << meta.geometry->width << "x"
            << meta.geometry->channels << " does not match D=" << x.rows();
        throw Error(Errc::GeometryMismatch, msg.str());
    }
}

Matrix round_to_float(const Matrix& m) {
    return m.cast<float>().cast<double>();
}

void validate_spec(const SyntheticSpec& spec) {
    auto fail = [](const std::string& msg) { throw Error(Errc::InvalidSpec, msg); };
    if (spec.d < 1 || spec.n < 1 || spec.c < 1) fail("D, N and C must be positive");
    if (spec.d > 0xFFFFFFFFLL || spec.n > 0xFFFFFFFFLL || spec.c > 0xFFFFFFFFLL) fail("dimensions exceed u32");
    if (const auto* e = std::get_if<ExponentialSpectrum>(&spec.spectrum)) {
        if (!(e->decay_rate >= 0.0) || !std::isfinite(e->decay_rate)) fail("decay_rate must be finite and >= 0");
    } else if (const auto* p = std::get_if<PowerLawSpectrum>(&spec.spectrum)) {
        if (!(p->exponent >= 0.0) || !std::isfinite(p->exponent)) fail("exponent must be finite and >= 0");
    } else {
        const auto& values = std::get<ExplicitSpectrum>(spec.spectrum).values;
        if (static_cast<Index>(values.size()) != spec.d) fail("explicit spectrum must have D entries");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] > 0.0) || !std::isfinite(values[i])) fail("eigenvalues must be positive and finite");
            if (i > 0 && values[i] > values[i - 1]) fail("eigenvalues must be descending");
        }
    }
    auto check_signal = [&](Index k, double snr, Index k_max, const char* kind) {
        if (k < 1 || k > k_max) {
            std::ostringstream msg;
            msg << kind << " k=" << k << " must lie in [1, " << k_max << "]";
            fail(msg.str());
        }
        if (!(snr >= 0.0) || !std::isfinite(snr)) fail("snr must be finite and >= 0");
    };
    if (const auto* b = std::get_if<BottomSignal>(&spec.signal)) check_signal(b->k, b->snr, spec.d - 1, "bottom_k");
    if (const auto* t = std::get_if<TopSignal>(&spec.signal)) check_signal(t->k, t->snr, spec.d, "top_k");
    if (const auto* a = std::get_if<AxisTopBasis>(&spec.basis); a && (a->m < 0 || a->m > spec.d))
        fail("axis_top basis needs 0 <= m <= D");
    if (spec.geometry && spec.geometry->size() != static_cast<std::uint64_t>(spec.d))
        fail("image geometry does not multiply out to D");
}

Vector spectrum_values(const SyntheticSpec& spec) {
    validate_spec(spec);
    Vector out(spec.d);
    for (Index i = 0; i < spec.d; ++i) {
        if (const auto* e = std::get_if<ExponentialSpectrum>(&spec.spectrum))
            out(i) = std::exp(-e->decay_rate * static_cast<double>(i));
        else if (const auto* p = std::get_if<PowerLawSpectrum>(&spec.spectrum))
            out(i) = std::pow(static_cast<double>(i + 1), -p->exponent);
        else
            out(i) = std::get<ExplicitSpectrum>(spec.spectrum).values[static_cast<std::size_t>(i)];
    }
    return out;
}

Matrix synthetic_basis(const SyntheticSpec& spec) {
    validate_spec(spec);
    Rng rng = counter_rng(spec.seed, kBasis);
    if (const auto* a = std::get_if<AxisTopBasis>(&spec.basis)) {
        Matrix basis = Matrix::Zero(spec.d, spec.d);
        basis.topLeftCorner(a->m, a->m).setIdentity();
        basis.bottomRightCorner(spec.d - a->m, spec.d - a->m) = random_orthogonal(spec.d - a->m, rng);
        return basis;
    }
    return random_orthogonal(spec.d, rng);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    const Vector lambda = spectrum_values(spec);
    const Matrix basis = synthetic_basis(spec);

    Rng latent_rng = counter_rng(spec.seed, kLatent);
    Matrix coords = lambda.cwiseSqrt().asDiagonal() * gaussian_matrix(spec.d, spec.n, latent_rng);

    std::vector<std::uint32_t> labels(static_cast<std::size_t>(spec.n));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint32_t>(i % spec.c);
    Rng label_rng = counter_rng(spec.seed, kLabels);
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[label_rng() % i]);

    Index first = 0, k = 0;
    double snr = 0.0;
    if (const auto* b = std::get_if<BottomSignal>(&spec.signal)) {
        first = spec.d - b->k;
        k = b->k;
        snr = b->snr;
    } else if (const auto* t = std::get_if<TopSignal>(&spec.signal)) {
        k = t->k;
        snr = t->snr;
    }
    if (k > 0) {
        // Offsets are centered across classes and scaled to unit RMS column norm,
        // so classes stay distinct even when k = 1.
        Rng offset_rng = counter_rng(spec.seed, kOffsets);
        Matrix offsets = gaussian_matrix(k, spec.c, offset_rng);
        offsets.colwise() -= offsets.rowwise().mean();
        const double rms = offsets.norm() / std::sqrt(static_cast<double>(spec.c));
        if (rms > 0.0) offsets /= rms;
        const Vector scale = snr * lambda.segment(first, k).cwiseSqrt();
        for (Index s = 0; s < spec.n; ++s)
            coords.col(s).segment(first, k) += scale.cwiseProduct(offsets.col(labels[static_cast<std::size_t>(s)]));
    }

    Dataset ds{DataMatrix(round_to_float(basis * coords)), std::move(labels),
               static_cast<std::uint32_t>(spec.c), DatasetMeta{spec.name, spec.geometry, false}};
    ds.validate();
    return ds;
}

std::string encode_container(const Dataset& ds) {
    ds.validate();
    const Matrix& x = ds.x.values();
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(x.rows()));
    put_u32(out, static_cast<std::uint32_t>(x.cols()));
    put_u32(out, ds.num_classes);
    std::uint32_t flags = 0;
    if (ds.meta.geometry) flags |= kFlagGeometry;
    if (ds.meta.centered) flags |= kFlagCentered;
    put_u32(out, flags);
    if (ds.meta.geometry) {
        put_u32(out, ds.meta.geometry->height);
        put_u32(out, ds.meta.geometry->width);
        put_u32(out, ds.meta.geometry->channels);
    }
    out.reserve(out.size() + 4 * static_cast<std::size_t>(x.size() + x.cols()));
    for (Index s = 0; s < x.cols(); ++s) {
        for (Index i = 0; i < x.rows(); ++i) {
            const float f = static_cast<float>(x(i, s));
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            put_u32(out, bits);
        }
    }
    for (std::uint32_t l : ds.labels) put_u32(out, l);
    return out;
}

Dataset decode_container(const std::string& bytes, std::string name) {
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw Error(Errc::BadMagic, "not a RALN container");
    Reader in(bytes);
    in.u32("magic");
    const std::uint32_t version = in.u32("header");
    if (version != kVersion)
        throw Error(Errc::VersionUnsupported, "container version " + std::to_string(version) + " is not supported");
    const std::uint32_t d = in.u32("header");
    const std::uint32_t n = in.u32("header");
    const std::uint32_t c = in.u32("header");
    const std::uint32_t flags = in.u32("header");
    if (d == 0 || n == 0 || c == 0) throw Error(Errc::ShapeMismatch, "container declares an empty dataset");

    DatasetMeta meta;
    meta.name = std::move(name);
    meta.centered = (flags & kFlagCentered) != 0;
    if (flags & kFlagGeometry) {
        ImageGeometry g;
        g.height = in.u32("geometry");
        g.width = in.u32("geometry");
        g.channels = in.u32("geometry");
        meta.geometry = g;
    }
    in.need((std::uint64_t{d} * n + n) * 4, "payload");

    Matrix x(d, n);
    for (Index s = 0; s < n; ++s)
        for (Index i = 0; i < d; ++i) x(i, s) = in.f32("values");
    std::vector<std::uint32_t> labels(n);
    for (auto& l : labels) l = in.u32("labels");

    Dataset ds{DataMatrix(std::move(x)), std::move(labels), c, std::move(meta)};
    ds.validate();
    return ds;
}

void save_container(const Dataset& ds, const std::filesystem::path& path) {
    const std::string bytes = encode_container(ds);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

Dataset load_container(const std::filesystem::path& path) {
    return decode_container(read_file(path), path.stem().string());
}

Dataset load_csv(const std::filesystem::path& path, std::optional<int> label_column, bool has_header) {
    const std::string text = read_file(path);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::size_t width = 0;
    std::size_t line_no = 0;
    bool header_pending = has_header;

    std::string_view rest(text);
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        const std::string_view line = trim(rest.substr(0, nl));
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto fields = split(line);
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            std::ostringstream msg;
            msg << "line " << line_no << " has " << fields.size() << " fields, expected " << width;
            throw Error(Errc::RaggedRows, msg.str());
        }
        std::size_t label_index = width;
        if (label_column) {
            const long long resolved = *label_column < 0 ? static_cast<long long>(width) + *label_column : *label_column;
            if (resolved < 0 || resolved >= static_cast<long long>(width))
                throw Error(Errc::IndexOutOfRange, "label column outside the row");
            label_index = static_cast<std::size_t>(resolved);
        }
        std::vector<double> values;
        values.reserve(width);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == label_index) {
                raw_labels.emplace_back(fields[j]);
                continue;
            }
            double v = 0.0;
            const auto* begin = fields[j].data();
            const auto* end = begin + fields[j].size();
            const auto [ptr, ec] = std::from_chars(begin, end, v);
            if (fields[j].empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
                std::ostringstream msg;
                msg << "line " << line_no << " field " << j + 1 << " is not a finite number: '" << fields[j] << "'";
                throw Error(Errc::NonNumericFeature, msg.str());
            }
            values.push_back(v);
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw Error(Errc::TruncatedFile, path.string() + " has no data rows");
    if (rows.front().empty()) throw Error(Errc::NonNumericFeature, "no feature columns");

    const Index d = static_cast<Index>(rows.front().size());
    const Index n = static_cast<Index>(rows.size());
    Matrix x(d, n);
    for (Index s = 0; s < n; ++s)
        for (Index i = 0; i < d; ++i) x(i, s) = rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)];

    std::vector<std::uint32_t> labels(static_cast<std::size_t>(n), 0);
    std::uint32_t classes = 1;
    if (label_column) {
        std::unordered_map<std::string, std::uint32_t> index;
        for (std::size_t s = 0; s < raw_labels.size(); ++s) {
            const auto [it, inserted] = index.emplace(raw_labels[s], static_cast<std::uint32_t>(index.size()));
            labels[s] = it->second;
        }
        classes = static_cast<std::uint32_t>(std::max<std::size_t>(index.size(), 1));
    }
    Dataset ds{DataMatrix(round_to_float(x)), std::move(labels), classes, DatasetMeta{path.stem().string(), {}, false}};
    ds.validate();
    return ds;
}

Matrix one_hot(const std::vector<std::uint32_t>& labels, std::uint32_t num_classes) {
    Matrix y = Matrix::Zero(num_classes, static_cast<Index>(labels.size()));
    for (std::size_t s = 0; s < labels.size(); ++s) {
        if (labels[s] >= num_classes) {
            std::ostringstream msg;
            msg << "label " << labels[s] << " at sample " << s << " is not below C=" << num_classes;
            throw Error(Errc::IndexOutOfRange, msg.str());
        }
        y(labels[s], static_cast<Index>(s)) = 1.0;
    }
    return y;
}

}  // namespace raln
