use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident = $code:expr, $text:expr;)* }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant,)*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)*];

            pub fn code(self) -> u8 {
                match self {
                    $($name::$variant => $code,)*
                }
            }

            pub fn from_code(code: u8) -> Option<Self> {
                match code {
                    $($code => Some($name::$variant),)*
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)*
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == s)
                    .ok_or_else(|| {
                        let names: Vec<_> = $name::ALL.iter().map(|v| v.name()).collect();
                        Error::InvalidTemplate(format!(
                            "unknown {} `{s}`; expected one of {}",
                            stringify!($name),
                            names.join(", ")
                        ))
                    })
            }
        }
    };
}

named_enum! {
    /// The nine garment boundary kinds, with stable integer codes.
    BoundaryType {
        Neckline = 0, "neckline";
        CenterFront = 1, "center_front";
        Hemline = 2, "hemline";
        SleeveCuff = 3, "sleeve_cuff";
        Waistline = 4, "waistline";
        PantCuff = 5, "pant_cuff";
        SkirtHem = 6, "skirt_hem";
        Armhole = 7, "armhole";
        DressHem = 8, "dress_hem";
    }
}

named_enum! {
    /// Template categories.
    GarmentCategory {
        LongSleeveUpper = 0, "long_sleeve_upper";
        ShortSleeveUpper = 1, "short_sleeve_upper";
        NoSleeveUpper = 2, "no_sleeve_upper";
        LongSleeveDress = 3, "long_sleeve_dress";
        ShortSleeveDress = 4, "short_sleeve_dress";
        NoSleeveDress = 5, "no_sleeve_dress";
        LongSleeveCoat = 6, "long_sleeve_coat";
        ShortSleeveCoat = 7, "short_sleeve_coat";
        NoSleeveCoat = 8, "no_sleeve_coat";
        LongPants = 9, "long_pants";
        ShortPants = 10, "short_pants";
        Skirt = 11, "skirt";
    }
}

named_enum! {
    /// Semantic labels of scene regions.
    SemanticLabel {
        Upper = 0, "upper";
        Lower = 1, "lower";
        Body = 2, "body";
    }
}

impl GarmentCategory {
    /// Categories the procedural generator can build.
    pub const PROCEDURAL: &'static [GarmentCategory] = &[
        GarmentCategory::Skirt,
        GarmentCategory::NoSleeveUpper,
        GarmentCategory::LongPants,
        GarmentCategory::LongSleeveUpper,
    ];

    pub fn semantic(self) -> SemanticLabel {
        match self {
            GarmentCategory::LongPants | GarmentCategory::ShortPants | GarmentCategory::Skirt => {
                SemanticLabel::Lower
            }
            _ => SemanticLabel::Upper,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_stable() {
        assert_eq!(BoundaryType::ALL.len(), 9);
        assert_eq!(GarmentCategory::ALL.len(), 12);
        for (i, b) in BoundaryType::ALL.iter().enumerate() {
            assert_eq!(b.code() as usize, i);
            assert_eq!(BoundaryType::from_code(i as u8), Some(*b));
            assert_eq!(b.name().parse::<BoundaryType>().unwrap(), *b);
        }
        assert_eq!(BoundaryType::from_code(9), None);
        assert_eq!(serde_json::to_string(&BoundaryType::SkirtHem).unwrap(), "\"skirt_hem\"");
        assert!("collar".parse::<BoundaryType>().is_err());
    }
}
