//! Output formatting: reals at 17 significant digits with '.' decimal,
//! infinities as "inf"/"-inf", absent values as "nan".

use kirchhoff_gevrey::bounds::ExtReal;

pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn ext(x: &ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => real(*v),
        ExtReal::Infinite => "inf".to_string(),
    }
}

pub fn opt(x: Option<f64>) -> String {
    match x {
        Some(v) => real(v),
        None => "nan".to_string(),
    }
}

pub fn opt_ext(x: &Option<ExtReal>) -> String {
    match x {
        Some(v) => ext(v),
        None => "nan".to_string(),
    }
}
