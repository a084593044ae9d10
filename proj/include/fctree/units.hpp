#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fctree {

// Physical dimension classes. Natural units: energy and momentum share the
// GeV dimension, so a unit is either an integer power of GeV (power 0 is the
// distinct Dimless tag), or an angle. Angle is additively incompatible with
// everything else and is the only admissible trig argument.
enum class UnitTag : uint8_t { Gev, Angle, Dimless };

inline constexpr int kDefaultPowerCap = 4;

struct UnitClass {
    UnitTag tag = UnitTag::Dimless;
    int8_t power = 0; // only meaningful for Gev; always nonzero there

    static UnitClass gev(int p) {
        if (p == 0) return UnitClass{UnitTag::Dimless, 0};
        return UnitClass{UnitTag::Gev, static_cast<int8_t>(p)};
    }
    static UnitClass angle() { return UnitClass{UnitTag::Angle, 0}; }
    static UnitClass dimless() { return UnitClass{UnitTag::Dimless, 0}; }

    bool operator==(const UnitClass&) const = default;

    // Gev of any power or Dimless; the multiplicative family.
    bool gev_like() const { return tag != UnitTag::Angle; }
    int gev_power() const { return tag == UnitTag::Gev ? power : 0; }
};

// Additive rule: identical class in, same class out.
std::optional<UnitClass> unit_add(UnitClass a, UnitClass b);

// Multiplicative rules: Gev/Dimless operands only, powers add/subtract,
// nullopt past the cap.
std::optional<UnitClass> unit_mul(UnitClass a, UnitClass b, int power_cap = kDefaultPowerCap);
std::optional<UnitClass> unit_div(UnitClass a, UnitClass b, int power_cap = kDefaultPowerCap);

// cos/sin: Angle -> Dimless.
std::optional<UnitClass> unit_trig(UnitClass a);

// Square doubles a Gev power (Angle forbidden).
std::optional<UnitClass> unit_sq(UnitClass a, int power_cap = kDefaultPowerCap);

// Square root halves an even Gev power (or keeps Dimless).
std::optional<UnitClass> unit_sqrt(UnitClass a);

// Text tokens: "gev:<power>" (also plain "gev" for power 1), "angle",
// "dimless".
std::string unit_to_string(UnitClass u);
std::optional<UnitClass> unit_from_string(const std::string& token);

} // namespace fctree
