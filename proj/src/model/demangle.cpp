#include "elfql/model/demangle.hpp"

#include <cxxabi.h>

#include <cstdlib>
#include <memory>

namespace elfql::model {
namespace {

class ItaniumDemangler final : public Demangler {
public:
    std::optional<std::string> demangle(std::string_view mangled) const override {
        const std::string input(mangled);
        int status = 0;
        std::unique_ptr<char, decltype(&std::free)> out(
            abi::__cxa_demangle(input.c_str(), nullptr, nullptr, &status), &std::free);
        if (status != 0 || !out) return std::nullopt;
        return std::string(out.get());
    }
};

} // namespace

const Demangler &itanium_demangler() {
    static const ItaniumDemangler instance;
    return instance;
}

std::string demangle(std::string_view name, const Demangler &decoder) {
    if (!name.starts_with("_Z")) return std::string(name);
    if (auto out = decoder.demangle(name)) return *std::move(out);
    // Static symbol tables may store "name@VERSION" or "name@@VERSION".
    if (const auto at = name.find('@'); at != std::string_view::npos) {
        if (auto out = decoder.demangle(name.substr(0, at))) return *std::move(out) + std::string(name.substr(at));
    }
    return std::string(name);
}

} // namespace elfql::model
