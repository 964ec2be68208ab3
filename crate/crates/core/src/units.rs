//! Physical constants and decibel conversions.

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Free-space wave impedance, ohms.
pub const Z_F0: f64 = 376.730313668;

/// Power floor (W) used when converting a zero power to decibels.
pub const POWER_FLOOR_W: f64 = 1e-30;

/// Field floor (V/m) used when converting a zero field to dBµV/m.
pub const FIELD_FLOOR_VM: f64 = 1e-15;

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    db(w) + 30.0
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    from_db(dbm - 30.0)
}

/// Power in dB with the floor applied, so that empty samples stay finite.
pub fn power_db_floored(w: f64) -> f64 {
    db(w.max(POWER_FLOOR_W))
}

/// RMS field strength in V/m to dBµV/m.
pub fn vm_to_dbuvm(e: f64) -> f64 {
    20.0 * (e / 1e-6).log10()
}

pub fn dbuvm_to_vm(dbuvm: f64) -> f64 {
    1e-6 * 10f64.powf(dbuvm / 20.0)
}

pub fn field_dbuvm_floored(e: f64) -> f64 {
    vm_to_dbuvm(e.max(FIELD_FLOOR_VM))
}

pub fn kmh_to_ms(v: f64) -> f64 {
    v / 3.6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert!((vm_to_dbuvm(1.0) - 120.0).abs() < 1e-12);
        assert!((w_to_dbm(1.0) - 30.0).abs() < 1e-12);
        assert!((dbm_to_w(81.18) - 131_220.0).abs() / 131_220.0 < 1e-3);
        assert!((dbuvm_to_vm(vm_to_dbuvm(0.37)) - 0.37).abs() < 1e-12);
    }
}
