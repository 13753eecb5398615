#pragma once

#include <stdexcept>
#include <string>

namespace ercf::units {

// All energies are carried in cm^-1 internally; wavelengths are vacuum values.
inline constexpr double kMevPerWavenumber = 0.12398;

constexpr double wavenumber_to_mev(double cm1) { return cm1 * kMevPerWavenumber; }
constexpr double mev_to_wavenumber(double mev) { return mev / kMevPerWavenumber; }

inline double wavelength_nm_to_wavenumber(double nm) {
  if (!(nm > 0.0)) throw std::domain_error("wavelength must be positive");
  return 1.0e7 / nm;
}

inline double wavenumber_to_wavelength_nm(double cm1) {
  if (!(cm1 > 0.0)) throw std::domain_error("wavenumber must be positive");
  return 1.0e7 / cm1;
}

enum class EnergyUnit { Wavenumber, MilliElectronVolt };

inline EnergyUnit parse_energy_unit(const std::string& text) {
  if (text == "cm-1") return EnergyUnit::Wavenumber;
  if (text == "meV") return EnergyUnit::MilliElectronVolt;
  throw std::domain_error("unknown energy unit '" + text + "' (expected cm-1 or meV)");
}

inline const char* unit_label(EnergyUnit u) { return u == EnergyUnit::Wavenumber ? "cm-1" : "meV"; }

inline double from_wavenumber(double cm1, EnergyUnit u) {
  return u == EnergyUnit::Wavenumber ? cm1 : wavenumber_to_mev(cm1);
}

inline double to_wavenumber(double value, EnergyUnit u) {
  return u == EnergyUnit::Wavenumber ? value : mev_to_wavenumber(value);
}

}  // namespace ercf::units
