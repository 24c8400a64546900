use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

fn check(lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(Error::Validation(format!(
            "coordinate ({lat}, {lon}) out of range"
        )));
    }
    Ok(())
}

/// Great-circle distance in km between two `(lat, lon)` points in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    check(a.0, a.1)?;
    check(b.0, b.1)?;
    let (lat1, lat2) = (a.0.to_radians(), b.0.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.1 - a.1).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: angle between the two unit vectors.
    fn chord_angle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
        let unit = |(lat, lon): (f64, f64)| {
            let (lat, lon) = (lat.to_radians(), lon.to_radians());
            [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
        };
        let (u, v) = (unit(a), unit(b));
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
        let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        EARTH_RADIUS_KM * sin.atan2(cos)
    }

    #[test]
    fn same_point_is_zero() {
        assert_eq!(haversine_km((34.0, -118.0), (34.0, -118.0)).unwrap(), 0.0);
    }

    #[test]
    fn antipodal_on_equator() {
        let d = haversine_km((0.0, 0.0), (0.0, 180.0)).unwrap();
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-6);
        assert!((d - 20015.1).abs() < 0.1);
    }

    #[test]
    fn los_angeles_to_san_francisco() {
        let la = (34.05, -118.25);
        let sf = (37.77, -122.42);
        let d = haversine_km(la, sf).unwrap();
        let oracle = chord_angle_km(la, sf);
        assert!((d - oracle).abs() < 1e-6);
        assert!((d - 559.0).abs() < 1.0, "{d}");
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(haversine_km((91.0, 0.0), (0.0, 0.0)).is_err());
        assert!(haversine_km((0.0, 0.0), (0.0, -181.0)).is_err());
    }
}
