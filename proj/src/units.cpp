#include "fctree/units.hpp"

#include <cstdlib>

namespace fctree {

std::optional<UnitClass> unit_add(UnitClass a, UnitClass b) {
    if (a == b) return a;
    return std::nullopt;
}

std::optional<UnitClass> unit_mul(UnitClass a, UnitClass b, int power_cap) {
    if (!a.gev_like() || !b.gev_like()) return std::nullopt;
    const int p = a.gev_power() + b.gev_power();
    if (p < -power_cap || p > power_cap) return std::nullopt;
    return UnitClass::gev(p);
}

std::optional<UnitClass> unit_div(UnitClass a, UnitClass b, int power_cap) {
    if (!a.gev_like() || !b.gev_like()) return std::nullopt;
    const int p = a.gev_power() - b.gev_power();
    if (p < -power_cap || p > power_cap) return std::nullopt;
    return UnitClass::gev(p);
}

std::optional<UnitClass> unit_trig(UnitClass a) {
    if (a.tag != UnitTag::Angle) return std::nullopt;
    return UnitClass::dimless();
}

std::optional<UnitClass> unit_sq(UnitClass a, int power_cap) {
    if (!a.gev_like()) return std::nullopt;
    const int p = 2 * a.gev_power();
    if (p < -power_cap || p > power_cap) return std::nullopt;
    return UnitClass::gev(p);
}

std::optional<UnitClass> unit_sqrt(UnitClass a) {
    if (!a.gev_like()) return std::nullopt;
    const int p = a.gev_power();
    if (p % 2 != 0) return std::nullopt;
    return UnitClass::gev(p / 2);
}

std::string unit_to_string(UnitClass u) {
    switch (u.tag) {
    case UnitTag::Angle:
        return "angle";
    case UnitTag::Dimless:
        return "dimless";
    case UnitTag::Gev:
        return "gev:" + std::to_string(static_cast<int>(u.power));
    }
    return "dimless";
}

std::optional<UnitClass> unit_from_string(const std::string& token) {
    if (token == "angle") return UnitClass::angle();
    if (token == "dimless") return UnitClass::dimless();
    if (token == "gev") return UnitClass::gev(1);
    if (token.rfind("gev:", 0) == 0) {
        const std::string num = token.substr(4);
        if (num.empty()) return std::nullopt;
        char* end = nullptr;
        const long p = std::strtol(num.c_str(), &end, 10);
        if (end == nullptr || *end != '\0') return std::nullopt;
        if (p < -64 || p > 64) return std::nullopt;
        return UnitClass::gev(static_cast<int>(p));
    }
    return std::nullopt;
}

} // namespace fctree
