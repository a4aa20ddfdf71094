#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace elfql::model {

/// Decodes one mangling scheme. Returns nullopt when the input is not a valid
/// mangled name for the scheme.
class Demangler {
public:
    virtual ~Demangler() = default;
    virtual std::optional<std::string> demangle(std::string_view mangled) const = 0;
};

/// Itanium C++ ABI ("_Z...") decoder.
const Demangler &itanium_demangler();

/// Total: names without the "_Z" prefix, and names the decoder rejects, are
/// returned unchanged.
std::string demangle(std::string_view name, const Demangler &decoder = itanium_demangler());

} // namespace elfql::model
