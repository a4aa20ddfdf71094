#pragma once

#include "elfql/elf/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace elfql::model {

struct DecodedInstruction {
    std::size_t length = 0;
    std::string mnemonic;
    std::string operands;
};

/// Decodes single instructions for one or more machines.
class InstructionDecoder {
public:
    virtual ~InstructionDecoder() = default;
    virtual bool supports(elf::Machine machine) const = 0;
    /// Decodes the instruction at the start of `bytes`, located at `address`.
    /// Returns nullopt for encodings the decoder does not understand.
    virtual std::optional<DecodedInstruction> decode(std::span<const std::uint8_t> bytes,
                                                     std::uint64_t address) const = 0;
};

/// A small x86-64 subset: common integer ALU, data movement, stack, control
/// flow and padding encodings, printed in Intel syntax.
const InstructionDecoder &x86_64_decoder();

/// Decoder that supports nothing; instruction tables stay empty.
const InstructionDecoder &null_decoder();

} // namespace elfql::model
