#include "rcgs/io.hpp"

#include "rcgs/format.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rcgs::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

using nlohmann::json;

void check_exists(const fs::path& path)
{
    if (!fs::exists(path)) fail(ErrorKind::kPrerequisite, "missing input: " + path.string());
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    check_exists(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
    return in;
}

void finish(std::ostream& out, const fs::path& path)
{
    out.flush();
    if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

json parse_json(const fs::path& path)
{
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::kIo, path.string() + ": " + e.what());
    }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::kIo, where.string() + ": missing or invalid field '" + key + "'");
    }
}

void check_version(const json& meta, const fs::path& where)
{
    const int v = field<int>(meta, "format_version", where);
    if (v != kFormatVersion)
        fail(ErrorKind::kIo, where.string() + ": unsupported format_version " + std::to_string(v));
}

template <typename T>
void read_exact(std::istream& in, T* data, std::size_t count, const fs::path& path)
{
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(T)))
        fail(ErrorKind::kIo, path.string() + ": file is shorter than its metadata declares");
}

void expect_end(std::istream& in, const fs::path& path)
{
    if (in.peek() != std::char_traits<char>::eof())
        fail(ErrorKind::kIo, path.string() + ": file is longer than its metadata declares");
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_nullable(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

json vector_json(const Vector& v)
{
    json a = json::array();
    for (double x : v) a.push_back(nullable(x));
    return a;
}

Vector vector_from(const json& a)
{
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = from_nullable(a[i]);
    return v;
}

json params_json(const ReservoirParams& p)
{
    return {{"n_nodes", p.n_nodes},         {"input_dim", p.input_dim}, {"spectral_radius", p.spectral_radius},
            {"pnz", p.pnz},                 {"gamma", p.gamma},         {"sigma", p.sigma},
            {"seed", p.seed}};
}

ReservoirParams params_from(const json& j, const fs::path& where)
{
    ReservoirParams p;
    p.n_nodes = field<int>(j, "n_nodes", where);
    p.input_dim = field<int>(j, "input_dim", where);
    p.spectral_radius = field<double>(j, "spectral_radius", where);
    p.pnz = field<double>(j, "pnz", where);
    p.gamma = field<double>(j, "gamma", where);
    p.sigma = field<double>(j, "sigma", where);
    p.seed = field<std::uint64_t>(j, "seed", where);
    return p;
}

}  // namespace

void write_f64_le(const fs::path& path, std::span<const double> values)
{
    std::ofstream out = open_out(path);
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    finish(out, path);
}

std::vector<double> read_f64_le(const fs::path& path)
{
    std::ifstream in = open_in(path);
    const auto bytes = fs::file_size(path);
    if (bytes % sizeof(double) != 0) fail(ErrorKind::kIo, path.string() + ": size is not a multiple of 8 bytes");
    std::vector<double> out(bytes / sizeof(double));
    read_exact(in, out.data(), out.size(), path);
    return out;
}

void write_i64_le(std::ostream& out, std::span<const std::int64_t> values)
{
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj)
{
    std::ofstream out = open_out(path);
    out << 't';
    for (int i = 0; i < traj.dim(); ++i) out << ",u" << i;
    out << '\n';
    for (Eigen::Index k = 0; k < traj.size(); ++k) {
        out << format_double(traj.time(k));
        for (int i = 0; i < traj.dim(); ++i) out << ',' << format_double(traj.states(k, i));
        out << '\n';
    }
    finish(out, path);
}

Trajectory read_trajectory_csv(const fs::path& path)
{
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::kIo, path.string() + ": empty file");
    int dim = 0;
    {
        std::istringstream header(line);
        std::string name;
        std::getline(header, name, ',');
        if (name != "t") fail(ErrorKind::kIo, path.string() + ": header must start with 't'");
        while (std::getline(header, name, ',')) {
            if (name != "u" + std::to_string(dim))
                fail(ErrorKind::kIo, path.string() + ": unexpected column '" + name + "'");
            ++dim;
        }
    }
    if (dim == 0) fail(ErrorKind::kIo, path.string() + ": no state columns");

    std::vector<double> times, values;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        int col = 0;
        while (std::getline(fields, cell, ',')) {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || end != cell.data() + cell.size())
                fail(ErrorKind::kIo, path.string() + ": bad number '" + cell + "' on line " + std::to_string(row));
            (col == 0 ? times : values).push_back(v);
            ++col;
        }
        if (col != dim + 1)
            fail(ErrorKind::kIo, path.string() + ": wrong field count on line " + std::to_string(row));
    }
    if (times.size() < 2) fail(ErrorKind::kIo, path.string() + ": need at least two rows to infer dt");

    Trajectory traj;
    traj.t0 = times.front();
    traj.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(traj.dt > 0.0)) fail(ErrorKind::kIo, path.string() + ": time column is not increasing");
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - traj.time(static_cast<Eigen::Index>(k))) > 1e-6 * traj.dt)
            fail(ErrorKind::kIo, path.string() + ": time column is not uniformly sampled");
    traj.states = Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(times.size()), dim);
    return traj;
}

void write_trajectory_bundle(const fs::path& dir, const Trajectory& traj)
{
    fs::create_directories(dir);
    const json meta = {{"format_version", kFormatVersion},
                       {"dims", traj.dim()},
                       {"dt", traj.dt},
                       {"t0", traj.t0},
                       {"rows", traj.size()},
                       {"dtype", "float64"},
                       {"layout", "row-major"},
                       {"endianness", "little"}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    write_f64_le(dir / "states.bin", std::span<const double>(traj.states.data(), traj.states.size()));
}

Trajectory read_trajectory_bundle(const fs::path& dir)
{
    const fs::path meta_path = dir / "meta.json";
    const json meta = parse_json(meta_path);
    check_version(meta, meta_path);
    if (field<std::string>(meta, "endianness", meta_path) != "little")
        fail(ErrorKind::kIo, meta_path.string() + ": only little-endian data is supported");
    const auto rows = field<Eigen::Index>(meta, "rows", meta_path);
    const auto dims = field<Eigen::Index>(meta, "dims", meta_path);

    const fs::path bin = dir / "states.bin";
    std::ifstream in = open_in(bin);
    Trajectory traj;
    traj.dt = field<double>(meta, "dt", meta_path);
    traj.t0 = field<double>(meta, "t0", meta_path);
    traj.states.resize(rows, dims);
    read_exact(in, traj.states.data(), static_cast<std::size_t>(rows * dims), bin);
    expect_end(in, bin);
    return traj;
}

void write_reservoir_bundle(const fs::path& dir, const Reservoir& res)
{
    fs::create_directories(dir);
    const SparseTriplets& a = res.adjacency();
    const json meta = {{"format_version", kFormatVersion},
                       {"params", params_json(res.params())},
                       {"n", a.n},
                       {"nnz", a.nnz()},
                       {"input_rows", res.input_matrix().rows()},
                       {"input_cols", res.input_matrix().cols()},
                       {"adjacency_layout", "rows int64[nnz], cols int64[nnz], values float64[nnz]"},
                       {"input_layout", "row-major float64"},
                       {"endianness", "little"}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");

    const fs::path adj = dir / "adjacency.bin";
    std::ofstream out = open_out(adj);
    write_i64_le(out, a.rows);
    write_i64_le(out, a.cols);
    out.write(reinterpret_cast<const char*>(a.values.data()), static_cast<std::streamsize>(a.nnz() * sizeof(double)));
    finish(out, adj);

    const RowMatrix w = res.input_matrix();
    write_f64_le(dir / "input_matrix.bin", std::span<const double>(w.data(), w.size()));
}

Reservoir read_reservoir_bundle(const fs::path& dir)
{
    const fs::path meta_path = dir / "meta.json";
    const json meta = parse_json(meta_path);
    check_version(meta, meta_path);
    const ReservoirParams params = params_from(meta.value("params", json::object()), meta_path);
    const auto nnz = field<std::size_t>(meta, "nnz", meta_path);

    SparseTriplets a;
    a.n = field<std::int64_t>(meta, "n", meta_path);
    a.rows.resize(nnz);
    a.cols.resize(nnz);
    a.values.resize(nnz);
    const fs::path adj = dir / "adjacency.bin";
    std::ifstream in = open_in(adj);
    read_exact(in, a.rows.data(), nnz, adj);
    read_exact(in, a.cols.data(), nnz, adj);
    read_exact(in, a.values.data(), nnz, adj);
    expect_end(in, adj);

    const auto rows = field<Eigen::Index>(meta, "input_rows", meta_path);
    const auto cols = field<Eigen::Index>(meta, "input_cols", meta_path);
    const fs::path win = dir / "input_matrix.bin";
    std::ifstream wf = open_in(win);
    RowMatrix w(rows, cols);
    read_exact(wf, w.data(), static_cast<std::size_t>(rows * cols), win);
    expect_end(wf, win);
    return Reservoir::from_matrices(params, std::move(a), Matrix(w));
}

void write_readout(const fs::path& dir, const Readout& readout)
{
    fs::create_directories(dir);
    const TrainingDiagnostics& d = readout.diagnostics();
    const json meta = {{"format_version", kFormatVersion},
                       {"features", to_string(readout.spec().kind)},
                       {"bias", readout.spec().includes_bias},
                       {"beta", readout.ridge_beta()},
                       {"output_dim", readout.output_dim()},
                       {"n_nodes", readout.n_nodes()},
                       {"feature_dim", readout.weights().cols()},
                       {"weights_layout", "row-major float64, output_dim x feature_dim"},
                       {"diagnostics",
                        {{"samples", d.samples},
                         {"rmse", vector_json(d.rmse)},
                         {"normal_residual", nullable(d.normal_residual)},
                         {"condition_estimate", nullable(d.condition_estimate)}}},
                       {"endianness", "little"}};
    write_text(dir / "readout.json", meta.dump(2) + "\n");
    const RowMatrix w = readout.weights();
    write_f64_le(dir / "wout.bin", std::span<const double>(w.data(), w.size()));
}

Readout read_readout(const fs::path& dir)
{
    const fs::path meta_path = dir / "readout.json";
    const json meta = parse_json(meta_path);
    check_version(meta, meta_path);
    FeatureSpec spec;
    spec.kind = feature_kind_from_string(field<std::string>(meta, "features", meta_path));
    spec.includes_bias = field<bool>(meta, "bias", meta_path);
    const auto rows = field<Eigen::Index>(meta, "output_dim", meta_path);
    const auto cols = field<Eigen::Index>(meta, "feature_dim", meta_path);

    TrainingDiagnostics d;
    if (meta.contains("diagnostics")) {
        const json& dj = meta["diagnostics"];
        d.samples = dj.value("samples", 0L);
        if (dj.contains("rmse")) d.rmse = vector_from(dj["rmse"]);
        if (dj.contains("normal_residual")) d.normal_residual = from_nullable(dj["normal_residual"]);
        if (dj.contains("condition_estimate")) d.condition_estimate = from_nullable(dj["condition_estimate"]);
    }

    const fs::path bin = dir / "wout.bin";
    std::ifstream in = open_in(bin);
    RowMatrix w(rows, cols);
    read_exact(in, w.data(), static_cast<std::size_t>(rows * cols), bin);
    expect_end(in, bin);
    Readout out(spec, Matrix(w), field<double>(meta, "beta", meta_path), d);
    if (out.n_nodes() != field<Eigen::Index>(meta, "n_nodes", meta_path))
        fail(ErrorKind::kIo, meta_path.string() + ": n_nodes does not match the feature dimension");
    return out;
}

std::string spectrum_to_json(const LyapunovSpectrum& spec, int indent)
{
    json history = json::array();
    for (const Vector& h : spec.convergence_history) history.push_back(vector_json(h));
    const json j = {{"exponents", vector_json(spec.exponents)},
                    {"k", spec.k},
                    {"sum", nullable(spec.exponents.sum())},
                    {"transient_discarded", spec.transient_discarded},
                    {"averaging_time", spec.averaging_time},
                    {"drift", vector_json(spec.drift)},
                    {"tolerance", spec.tolerance},
                    {"converged", spec.converged},
                    {"escape_time", spec.escape_time ? json(*spec.escape_time) : json(nullptr)},
                    {"convergence_history", history}};
    return j.dump(indent);
}

LyapunovSpectrum spectrum_from_json(const std::string& text)
{
    const fs::path where = "spectrum json";
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::kIo, std::string("spectrum json: ") + e.what());
    }
    LyapunovSpectrum s;
    s.exponents = vector_from(field<json>(j, "exponents", where));
    s.k = j.value("k", static_cast<int>(s.exponents.size()));
    s.transient_discarded = j.value("transient_discarded", 0.0);
    s.averaging_time = j.value("averaging_time", 0.0);
    if (j.contains("drift")) s.drift = vector_from(j["drift"]);
    s.tolerance = j.value("tolerance", 0.0);
    s.converged = j.value("converged", false);
    if (j.contains("escape_time") && !j["escape_time"].is_null()) s.escape_time = j["escape_time"].get<double>();
    if (j.contains("convergence_history"))
        for (const json& h : j["convergence_history"]) s.convergence_history.push_back(vector_from(h));
    return s;
}

std::string standardization_to_json(const Standardization& s, int indent)
{
    return json{{"mean", vector_json(s.mean)}, {"scale", vector_json(s.scale)}}.dump(indent);
}

Standardization standardization_from_json(const std::string& text)
{
    const fs::path where = "standardization json";
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::kIo, std::string("standardization json: ") + e.what());
    }
    Standardization s{vector_from(field<json>(j, "mean", where)), vector_from(field<json>(j, "scale", where))};
    if (s.mean.size() != s.scale.size() || !s.mean.allFinite() || !(s.scale.array() > 0.0).all())
        fail(ErrorKind::kIo, "standardization json: mean and scale must be finite, positive-scaled and equal length");
    return s;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out = open_out(path);
    out << text;
    finish(out, path);
}

std::string read_text(const fs::path& path)
{
    std::ifstream in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string sha256_file(const fs::path& path)
{
    std::ifstream in = open_in(path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        fail(ErrorKind::kIo, "sha256: digest initialization failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

}  // namespace rcgs::io
