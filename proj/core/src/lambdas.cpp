#include "srhc/lambdas.hpp"
#include "srhc/errors.hpp"
#include "srhc/random.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <limits>
#include <vector>

namespace srhc {
namespace {

constexpr char kPayloadMagic[8] = {'S', 'R', 'H', 'C', 'L', 'A', 'M', '1'};

struct Factors {
    Matrix Le;  // n x n
    Matrix Lw;  // n x n, one step of W
    Matrix Lv;  // p x p, one step of V
};

struct Shard {
    Matrix e;
    Matrix W;
    Matrix V;
    Matrix innov;
};

std::int64_t shard_size(std::int64_t count, int s)
{
    const std::int64_t base = count / kLambdaShards;
    const std::int64_t extra = count % kLambdaShards;
    return base + (s < extra ? 1 : 0);
}

Shard sample_shard(const Factors& f, const InnovationMaps& maps, int N, std::int64_t size, std::uint64_t seed)
{
    const auto n = f.Le.rows();
    const auto p = f.Lv.rows();
    const auto c = static_cast<Eigen::Index>(size);
    Matrix Ze(n, c);
    Matrix Zw(N * n, c);
    Matrix Zv((N + 1) * p, c);
    GaussianStream rng(seed);
    for (Eigen::Index j = 0; j < c; ++j) {
        for (Eigen::Index i = 0; i < Ze.rows(); ++i) {
            Ze(i, j) = rng.next();
        }
        for (Eigen::Index i = 0; i < Zw.rows(); ++i) {
            Zw(i, j) = rng.next();
        }
        for (Eigen::Index i = 0; i < Zv.rows(); ++i) {
            Zv(i, j) = rng.next();
        }
    }
    Shard s;
    s.e = f.Le * Ze;
    s.W.resize(N * n, c);
    for (int k = 0; k < N; ++k) {
        s.W.middleRows(k * n, n) = f.Lw * Zw.middleRows(k * n, n);
    }
    s.V.resize((N + 1) * p, c);
    for (int k = 0; k <= N; ++k) {
        s.V.middleRows(k * p, p) = f.Lv * Zv.middleRows(k * p, p);
    }
    s.innov = maps.Ge * s.e + maps.Gw * s.W + maps.Gv * s.V;
    return s;
}

Factors make_factors(const Matrix& P, const SystemModel& model)
{
    if (P.rows() != model.n() || P.cols() != model.n()) {
        throw Error(ErrorKind::DimensionMismatch, "error covariance has wrong size");
    }
    return {linalg::psd_factor(P), linalg::psd_factor(model.sigma_w), linalg::psd_factor(model.sigma_v)};
}

std::uint64_t shard_seed(std::uint64_t seed, int s)
{
    return derive_seed(seed, static_cast<std::uint64_t>(s), 0x1a4bdaULL);
}

// Standard error of a mean from first/second raw moment sums.
Matrix standard_error(const Matrix& s1, const Matrix& s2, double c)
{
    if (c < 2.0) {
        return Matrix::Constant(s1.rows(), s1.cols(), std::numeric_limits<double>::infinity());
    }
    const Matrix mean = s1 / c;
    const Matrix var = ((s2 / c - mean.cwiseProduct(mean)) * (c / (c - 1.0))).cwiseMax(0.0);
    return (var / c).cwiseSqrt();
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void put_bytes(std::vector<unsigned char>& out, const void* data, std::size_t size)
{
    const auto* b = static_cast<const unsigned char*>(data);
    out.insert(out.end(), b, b + size);
}

void put_matrix(std::vector<unsigned char>& out, const Matrix& m)
{
    const std::int64_t dims[2] = {m.rows(), m.cols()};
    put_bytes(out, dims, sizeof(dims));
    put_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

class Reader {
public:
    explicit Reader(const std::vector<unsigned char>& buf) : buf_(buf) {}

    void get(void* dst, std::size_t size)
    {
        if (pos_ + size > buf_.size()) {
            throw Error(ErrorKind::CacheCorrupt, "lambda payload truncated");
        }
        std::memcpy(dst, buf_.data() + pos_, size);
        pos_ += size;
    }

    Matrix matrix()
    {
        std::int64_t dims[2];
        get(dims, sizeof(dims));
        if (dims[0] < 0 || dims[1] < 0 || dims[0] * dims[1] > 100'000'000) {
            throw Error(ErrorKind::CacheCorrupt, "lambda payload has bad matrix dimensions");
        }
        Matrix m(dims[0], dims[1]);
        get(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
        return m;
    }

    bool done() const { return pos_ == buf_.size(); }

private:
    const std::vector<unsigned char>& buf_;
    std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        }
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) {
            throw Error(ErrorKind::Io, "short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::vector<unsigned char> encode_payload(const LambdaSet& l)
{
    std::vector<unsigned char> out;
    put_bytes(out, kPayloadMagic, sizeof(kPayloadMagic));
    const std::int32_t dims[3] = {l.N, l.n, l.p};
    put_bytes(out, dims, sizeof(dims));
    put_bytes(out, &l.sample_count, sizeof(l.sample_count));
    put_bytes(out, &l.seed, sizeof(l.seed));
    for (const Matrix* m : {&l.lambda_phi_e, &l.lambda_phi_x, &l.lambda_w_phi, &l.lambda_phi_phi, &l.P_used,
                            &l.se_phi_e, &l.se_w_phi, &l.se_phi_phi}) {
        put_matrix(out, *m);
    }
    put_matrix(out, l.lambda_phi);
    put_matrix(out, l.se_phi);
    return out;
}

LambdaSet decode_payload(const std::vector<unsigned char>& buf)
{
    Reader r(buf);
    char magic[8];
    r.get(magic, sizeof(magic));
    if (std::memcmp(magic, kPayloadMagic, sizeof(magic)) != 0) {
        throw Error(ErrorKind::CacheCorrupt, "lambda payload has a bad magic number");
    }
    LambdaSet l;
    std::int32_t dims[3];
    r.get(dims, sizeof(dims));
    l.N = dims[0];
    l.n = dims[1];
    l.p = dims[2];
    r.get(&l.sample_count, sizeof(l.sample_count));
    r.get(&l.seed, sizeof(l.seed));
    for (Matrix* m : {&l.lambda_phi_e, &l.lambda_phi_x, &l.lambda_w_phi, &l.lambda_phi_phi, &l.P_used, &l.se_phi_e,
                      &l.se_w_phi, &l.se_phi_phi}) {
        *m = r.matrix();
    }
    l.lambda_phi = r.matrix();
    l.se_phi = r.matrix();
    if (!r.done()) {
        throw Error(ErrorKind::CacheCorrupt, "lambda payload has trailing bytes");
    }
    const Eigen::Index Np = static_cast<Eigen::Index>(l.N) * l.p;
    if (l.lambda_phi.size() != Np || l.lambda_phi_phi.rows() != Np || l.lambda_phi_e.cols() != l.n) {
        throw Error(ErrorKind::CacheCorrupt, "lambda payload has inconsistent shapes");
    }
    return l;
}

nlohmann::json key_json(const LambdaCacheKey& key)
{
    return {{"model_hash", hex64(key.model_hash)}, {"N", key.N},          {"saturation", key.saturation},
            {"p_hash", hex64(key.p_hash)},         {"count", key.count}, {"seed", key.seed}};
}

}  // namespace

InnovationMaps innovation_maps(const ErrorLift& lift, const SystemModel& model, int N)
{
    const int n = model.n();
    const int p = model.p();
    if (lift.Fe.rows() != (N + 1) * n || lift.Fw.cols() != N * n || lift.Fv.cols() != (N + 1) * p) {
        throw Error(ErrorKind::DimensionMismatch, "error lift does not match the horizon");
    }
    const Matrix Ca = linalg::kron_identity(N + 1, model.C);
    InnovationMaps maps;
    maps.Ge = Ca * lift.Fe;
    maps.Gw = Ca * lift.Fw;
    maps.Gv = Matrix::Identity((N + 1) * p, (N + 1) * p) - Ca * lift.Fv;
    return maps;
}

InnovationBatch sample_innovation_batch(const Matrix& P, const ErrorLift& lift, const SystemModel& model, int N,
                                        std::int64_t count, std::uint64_t seed, const SaturationFunction& sat)
{
    if (count < 1) {
        throw Error(ErrorKind::DegenerateSpec, "sample count must be positive");
    }
    const Factors f = make_factors(P, model);
    const InnovationMaps maps = innovation_maps(lift, model, N);
    const int n = model.n();
    const int p = model.p();
    const auto c = static_cast<Eigen::Index>(count);

    InnovationBatch b;
    b.e.resize(n, c);
    b.W.resize(N * n, c);
    b.V.resize((N + 1) * p, c);
    b.innov.resize((N + 1) * p, c);
    Eigen::Index col = 0;
    for (int s = 0; s < kLambdaShards; ++s) {
        const std::int64_t size = shard_size(count, s);
        if (size == 0) {
            continue;
        }
        const Shard sh = sample_shard(f, maps, N, size, shard_seed(seed, s));
        const auto w = static_cast<Eigen::Index>(size);
        b.e.middleCols(col, w) = sh.e;
        b.W.middleCols(col, w) = sh.W;
        b.V.middleCols(col, w) = sh.V;
        b.innov.middleCols(col, w) = sh.innov;
        col += w;
    }
    b.phi = b.innov.topRows(N * p);
    sat.apply_inplace(b.phi);
    return b;
}

LambdaSet estimate_lambdas(const Matrix& P, const ErrorLift& lift, const SystemModel& model, int N,
                           const SaturationFunction& sat, std::int64_t count, std::uint64_t seed)
{
    if (count < 1) {
        throw Error(ErrorKind::DegenerateSpec, "sample count must be positive");
    }
    const Factors f = make_factors(P, model);
    const InnovationMaps maps = innovation_maps(lift, model, N);
    const int n = model.n();
    const int p = model.p();
    const int Np = N * p;
    const int Nn = N * n;

    Matrix s_phi = Matrix::Zero(Np, 1), s2_phi = Matrix::Zero(Np, 1);
    Matrix s_pe = Matrix::Zero(Np, n), s2_pe = Matrix::Zero(Np, n);
    Matrix s_wp = Matrix::Zero(Nn, Np), s2_wp = Matrix::Zero(Nn, Np);
    Matrix s_pp = Matrix::Zero(Np, Np), s2_pp = Matrix::Zero(Np, Np);

    for (int s = 0; s < kLambdaShards; ++s) {
        const std::int64_t size = shard_size(count, s);
        if (size == 0) {
            continue;
        }
        const Shard sh = sample_shard(f, maps, N, size, shard_seed(seed, s));
        Matrix phi = sh.innov.topRows(Np);
        sat.apply_inplace(phi);
        const Matrix phi2 = phi.cwiseProduct(phi);
        const Matrix e2 = sh.e.cwiseProduct(sh.e);
        const Matrix w2 = sh.W.cwiseProduct(sh.W);
        s_phi += phi.rowwise().sum();
        s2_phi += phi2.rowwise().sum();
        s_pe += phi * sh.e.transpose();
        s2_pe += phi2 * e2.transpose();
        s_wp += sh.W * phi.transpose();
        s2_wp += w2 * phi2.transpose();
        s_pp += phi * phi.transpose();
        s2_pp += phi2 * phi2.transpose();
    }

    const double c = static_cast<double>(count);
    LambdaSet l;
    l.N = N;
    l.n = n;
    l.p = p;
    l.lambda_phi = s_phi.col(0) / c;
    l.lambda_phi_e = s_pe / c;
    l.lambda_phi_x = l.lambda_phi_e;
    l.lambda_w_phi = s_wp / c;
    l.lambda_phi_phi = linalg::symmetrize(s_pp / c);
    l.P_used = P;
    l.sample_count = count;
    l.seed = seed;
    l.se_phi = standard_error(s_phi, s2_phi, c).col(0);
    l.se_phi_e = standard_error(s_pe, s2_pe, c);
    l.se_w_phi = standard_error(s_wp, s2_wp, c);
    l.se_phi_phi = standard_error(s_pp, s2_pp, c);
    return l;
}

LambdaSet estimate_lambdas(const Matrix& P, const SystemModel& model, const RiccatiSolution& riccati, int N,
                           const SaturationFunction& sat, std::int64_t count, std::uint64_t seed)
{
    const ErrorLift lift = build_error_lift(steady_state_gains(model, riccati, N));
    return estimate_lambdas(P, lift, model, N, sat, count, seed);
}

Matrix assemble_lambda_phi_x(const LambdaSet& lset, const Vector& xhat)
{
    if (xhat.size() != lset.lambda_phi_e.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "xhat has wrong length for the lambda set");
    }
    return lset.lambda_phi_e + lset.lambda_phi * xhat.transpose();
}

std::string LambdaCacheKey::hex() const
{
    std::uint64_t h = linalg::hash_bytes({reinterpret_cast<const unsigned char*>(&model_hash), sizeof(model_hash)});
    const std::int64_t fields[2] = {N, count};
    h = linalg::hash_bytes({reinterpret_cast<const unsigned char*>(fields), sizeof(fields)}, h);
    h = linalg::hash_bytes({reinterpret_cast<const unsigned char*>(saturation.data()), saturation.size()}, h);
    h = linalg::hash_bytes({reinterpret_cast<const unsigned char*>(&p_hash), sizeof(p_hash)}, h);
    h = linalg::hash_bytes({reinterpret_cast<const unsigned char*>(&seed), sizeof(seed)}, h);
    return hex64(h);
}

LambdaCacheKey make_lambda_key(const SystemModel& model, int N, const SaturationFunction& sat, const Matrix& P,
                               std::int64_t count, std::uint64_t seed)
{
    LambdaCacheKey key;
    std::uint64_t h = linalg::hash_matrix(model.A);
    h = linalg::hash_matrix(model.B, h);
    h = linalg::hash_matrix(model.C, h);
    h = linalg::hash_matrix(model.sigma_w, h);
    h = linalg::hash_matrix(model.sigma_v, h);
    key.model_hash = h;
    key.N = N;
    key.saturation = sat.describe();
    key.p_hash = linalg::hash_matrix(P);
    key.count = count;
    key.seed = seed;
    return key;
}

void write_lambda_payload(const std::filesystem::path& path, const LambdaSet& lset)
{
    const std::vector<unsigned char> bytes = encode_payload(lset);
    write_file_atomic(path, bytes.data(), bytes.size());
}

LambdaSet read_lambda_payload(const std::filesystem::path& path)
{
    return decode_payload(read_file(path));
}

LambdaCacheResult lambda_cache_get_or_compute(const LambdaCacheKey& key, const std::filesystem::path& dir,
                                              const std::function<LambdaSet()>& compute, bool force)
{
    const std::filesystem::path sub = dir / "lambda";
    const std::string name = key.hex();
    const std::filesystem::path bin = sub / (name + ".bin");
    const std::filesystem::path side = sub / (name + ".json");

    LambdaCacheResult result;
    result.payload_path = bin;
    bool existed = false;
    if (!force && std::filesystem::exists(bin) && std::filesystem::exists(side)) {
        existed = true;
        try {
            const std::vector<unsigned char> payload = read_file(bin);
            const std::vector<unsigned char> sidecar = read_file(side);
            const nlohmann::json meta = nlohmann::json::parse(sidecar.begin(), sidecar.end());
            if (meta.at("payload_hash").get<std::string>() != hex64(linalg::hash_bytes(payload)) ||
                meta.at("key") != key_json(key)) {
                throw Error(ErrorKind::CacheCorrupt, "sidecar does not match payload");
            }
            result.lambdas = decode_payload(payload);
            result.outcome = CacheOutcome::Hit;
            return result;
        } catch (const nlohmann::json::exception&) {
        } catch (const Error&) {
        }
    } else if (force && std::filesystem::exists(bin)) {
        existed = true;
    }

    result.lambdas = compute();
    result.outcome = existed ? CacheOutcome::Recomputed : CacheOutcome::Computed;

    std::error_code ec;
    std::filesystem::create_directories(sub, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create cache directory " + sub.string());
    }
    const std::vector<unsigned char> payload = encode_payload(result.lambdas);
    write_file_atomic(bin, payload.data(), payload.size());

    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const nlohmann::json meta = {{"key", key_json(key)},
                                 {"entry", name},
                                 {"payload_hash", hex64(linalg::hash_bytes(payload))},
                                 {"sample_count", result.lambdas.sample_count},
                                 {"seed", result.lambdas.seed},
                                 {"created", stamp}};
    const std::string text = meta.dump(2) + "\n";
    write_file_atomic(side, text.data(), text.size());
    return result;
}

}  // namespace srhc
