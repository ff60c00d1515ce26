#pragma once

#include <string>
#include <string_view>

// Default prompt texts. They were written for this project; the wording the
// original labeling runs used is not public.
namespace mev::prompts {

inline constexpr std::string_view kDescribePreamble =
    "### TASK: DESCRIBE VERILOG\n"
    "You document hardware designs. Read the Verilog source below and write a\n"
    "concise natural-language description of what the module does: its ports,\n"
    "its behaviour, and any clocking or reset scheme. Reply with the description\n"
    "only, without code.\n";

inline constexpr std::string_view kTierDefinitions =
    "Basic: plain connections and single primitive gates, e.g. wiring signals\n"
    "  through, inverters, buffers, AND/OR/XOR gates.\n"
    "Intermediate: small combinational building blocks, e.g. multiplexers,\n"
    "  adders and subtractors, comparators, encoders/decoders, simple ALUs.\n"
    "Advanced: designs with state, e.g. clocked registers, counters,\n"
    "  flip-flops, sequential circuits, finite state machines.\n"
    "Expert: composite designs that combine blocks from the tiers above, e.g. a\n"
    "  datapath with an FSM controller.\n";

inline const std::string kCategorizePreamble =
    std::string("### TASK: CLASSIFY VERILOG COMPLEXITY\n"
                "Assign the design below to exactly one complexity tier.\n"
                "Tiers:\n") +
    std::string(kTierDefinitions) + "Reply with the tier name only.\n";

inline const std::string kClassifierPreamble =
    std::string("### TASK: CLASSIFY DESIGN REQUEST\n"
                "Decide which complexity tier the requested hardware design belongs to.\n"
                "Tiers:\n") +
    std::string(kTierDefinitions) + "Reply with the tier name only.\n";

// Prepended to every problem prompt, identically for every expert and baseline.
inline constexpr std::string_view kGenerationPreamble =
    "// Write synthesizable Verilog code for the module described below.\n"
    "// Return one complete module definition.\n";

// Section markers inside categorization content.
inline constexpr std::string_view kDescriptionHeader = "Description:\n";
inline constexpr std::string_view kCodeHeader = "\n\nVerilog code:\n";

// Appended to code cut down to fit the prompt-token budget.
inline constexpr std::string_view kTruncationMarker = "\n// ... [truncated to fit the prompt token limit]\n";

}  // namespace mev::prompts
