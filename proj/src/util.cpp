#include "plf/util.hpp"

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "plf/errors.hpp"

namespace plf {

std::string fmt_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {
const long double kPiL = 3.141592653589793238462643383279502884L;
}

double deg_to_rad(double deg) {
    return static_cast<double>(static_cast<long double>(deg) * kPiL / 180.0L);
}

double rad_to_deg(double rad) {
    return static_cast<double>(static_cast<long double>(rad) * 180.0L / kPiL);
}

std::string rad_to_deg_text(double rad) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.21Lg", static_cast<long double>(rad) * 180.0L / kPiL);
    return buf;
}

double deg_text_to_rad(const std::string& deg) {
    char* end = nullptr;
    const long double v = std::strtold(deg.c_str(), &end);
    if (end == deg.c_str() || *end != '\0')
        throw Error("SchemaViolation", "bad angle value '" + deg + "'");
    return static_cast<double>(v * kPiL / 180.0L);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("FileWriteFailed", "cannot write " + path.string());
    out << content;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int threads = workers > 0 ? workers : omp_get_max_threads();
    std::exception_ptr err;
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace plf
