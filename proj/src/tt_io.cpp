#include "qttv/tt_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace qttv {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'T', 'T', 'V'};

template <class U>
void put(std::ostream& os, U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    std::array<char, sizeof(U)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(U));
}

template <class U>
U get(std::istream& is) {
    std::array<char, sizeof(U)> bytes;
    if (!is.read(bytes.data(), sizeof(U))) throw InvalidArgument("tensor train stream truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    U value;
    std::memcpy(&value, bytes.data(), sizeof(U));
    return value;
}

template <class T>
void put_scalar(std::ostream& os, T v) {
    if constexpr (is_complex_v<T>) {
        put(os, v.real());
        put(os, v.imag());
    } else {
        put(os, v);
    }
}

template <class T>
T get_scalar(std::istream& is) {
    if constexpr (is_complex_v<T>) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        return {re, im};
    } else {
        return get<double>(is);
    }
}

template <class T>
TensorTrain<T> read_cores(std::istream& is, const std::vector<std::size_t>& ranks) {
    const std::size_t d = ranks.size() - 1;
    std::vector<typename TensorTrain<T>::Core> cores(d);
    for (std::size_t p = 0; p < d; ++p) {
        const auto rl = static_cast<Eigen::Index>(ranks[p]);
        const auto rr = static_cast<Eigen::Index>(ranks[p + 1]);
        cores[p][0].resize(rl, rr);
        cores[p][1].resize(rl, rr);
        for (Eigen::Index beta = 0; beta < rr; ++beta)
            for (int k = 0; k < 2; ++k)
                for (Eigen::Index alpha = 0; alpha < rl; ++alpha)
                    cores[p][k](alpha, beta) = get_scalar<T>(is);
    }
    return TensorTrain<T>(std::move(cores));
}

template <class T>
nlohmann::json scalar_json(T v) {
    if constexpr (is_complex_v<T>)
        return nlohmann::json::array({v.real(), v.imag()});
    else
        return v;
}

template <class T>
T scalar_from_json(const nlohmann::json& j) {
    if constexpr (is_complex_v<T>)
        return {j.at(0).get<double>(), j.at(1).get<double>()};
    else
        return j.get<double>();
}

template <class T>
TensorTrain<T> cores_from_json(const nlohmann::json& j, const std::vector<std::size_t>& ranks) {
    const std::size_t d = ranks.size() - 1;
    const auto& jc = j.at("cores");
    if (jc.size() != d) throw InvalidArgument("JSON tensor train: core count mismatch");
    std::vector<typename TensorTrain<T>::Core> cores(d);
    for (std::size_t p = 0; p < d; ++p) {
        const auto rl = static_cast<Eigen::Index>(ranks[p]);
        const auto rr = static_cast<Eigen::Index>(ranks[p + 1]);
        if (jc[p].size() != static_cast<std::size_t>(2 * rl * rr))
            throw InvalidArgument("JSON tensor train: core " + std::to_string(p) +
                                  " has wrong length");
        cores[p][0].resize(rl, rr);
        cores[p][1].resize(rl, rr);
        std::size_t i = 0;
        for (Eigen::Index beta = 0; beta < rr; ++beta)
            for (int k = 0; k < 2; ++k)
                for (Eigen::Index alpha = 0; alpha < rl; ++alpha)
                    cores[p][k](alpha, beta) = scalar_from_json<T>(jc[p][i++]);
    }
    return TensorTrain<T>(std::move(cores));
}

}  // namespace

template <class T>
void write_binary(std::ostream& os, const TensorTrain<T>& a) {
    os.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(os, kBinaryFormatVersion);
    put<std::uint8_t>(os, is_complex_v<T> ? 1 : 0);
    for (int i = 0; i < 3; ++i) put<std::uint8_t>(os, 0);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(a.modes()));
    for (auto r : a.ranks()) put<std::uint64_t>(os, r);
    for (const auto& c : a.cores())
        for (Eigen::Index beta = 0; beta < c[0].cols(); ++beta)
            for (int k = 0; k < 2; ++k)
                for (Eigen::Index alpha = 0; alpha < c[0].rows(); ++alpha)
                    put_scalar<T>(os, c[k](alpha, beta));
    if (!os) throw Error("failed writing tensor train");
}

AnyTT read_binary(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != kMagic)
        throw InvalidArgument("not a tensor train stream (bad magic)");
    const auto version = get<std::uint32_t>(is);
    if (version != kBinaryFormatVersion)
        throw InvalidArgument("unsupported tensor train format version " +
                              std::to_string(version));
    const auto kind = get<std::uint8_t>(is);
    for (int i = 0; i < 3; ++i) get<std::uint8_t>(is);
    const auto d = get<std::uint32_t>(is);
    if (d < 1 || d > 62) throw InvalidArgument("tensor train stream: bad mode count");
    std::vector<std::size_t> ranks(d + 1);
    for (auto& r : ranks) {
        const auto v = get<std::uint64_t>(is);
        if (v < 1 || v > (1U << 20)) throw InvalidArgument("tensor train stream: bad rank");
        r = static_cast<std::size_t>(v);
    }
    switch (kind) {
        case 0: return read_cores<double>(is, ranks);
        case 1: return read_cores<Complex>(is, ranks);
        default: throw InvalidArgument("tensor train stream: unknown scalar kind");
    }
}

template <class T>
nlohmann::json to_json(const TensorTrain<T>& a) {
    nlohmann::json j;
    j["format"] = "qttv.tt/1";
    j["scalar"] = is_complex_v<T> ? "complex128" : "float64";
    j["d"] = a.modes();
    j["ranks"] = a.ranks();
    auto cores = nlohmann::json::array();
    for (const auto& c : a.cores()) {
        auto flat = nlohmann::json::array();
        for (Eigen::Index beta = 0; beta < c[0].cols(); ++beta)
            for (int k = 0; k < 2; ++k)
                for (Eigen::Index alpha = 0; alpha < c[0].rows(); ++alpha)
                    flat.push_back(scalar_json<T>(c[k](alpha, beta)));
        cores.push_back(std::move(flat));
    }
    j["cores"] = std::move(cores);
    return j;
}

AnyTT from_json(const nlohmann::json& j) {
    try {
        const auto ranks = j.at("ranks").get<std::vector<std::size_t>>();
        if (ranks.size() < 2) throw InvalidArgument("JSON tensor train: need at least one core");
        if (j.contains("d") && j.at("d").get<std::size_t>() + 1 != ranks.size())
            throw InvalidArgument("JSON tensor train: d does not match ranks");
        const auto scalar = j.value("scalar", std::string("float64"));
        if (scalar == "float64") return cores_from_json<double>(j, ranks);
        if (scalar == "complex128") return cores_from_json<Complex>(j, ranks);
        throw InvalidArgument("JSON tensor train: unknown scalar kind " + scalar);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("JSON tensor train: ") + e.what());
    }
}

template void write_binary(std::ostream&, const TensorTrain<double>&);
template void write_binary(std::ostream&, const TensorTrain<Complex>&);
template nlohmann::json to_json(const TensorTrain<double>&);
template nlohmann::json to_json(const TensorTrain<Complex>&);

}  // namespace qttv
