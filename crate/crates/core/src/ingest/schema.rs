use crate::{Error, Result};

const VOC21: [&str; 21] = [
    "background",
    "aeroplane",
    "bicycle",
    "bird",
    "boat",
    "bottle",
    "bus",
    "car",
    "cat",
    "chair",
    "cow",
    "dining table",
    "dog",
    "horse",
    "motorbike",
    "person",
    "potted plant",
    "sheep",
    "sofa",
    "train",
    "tv/monitor",
];

/// Ordered segmentation class labels shared with the feature extractor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSchema {
    name: String,
    classes: Vec<String>,
}

impl ClassSchema {
    pub fn new(name: impl Into<String>, classes: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        if classes.is_empty() {
            return Err(Error::Validation("class schema is empty".into()));
        }
        for c in &classes {
            if !seen.insert(c.as_str()) {
                return Err(Error::Validation(format!("duplicate class label {c:?}")));
            }
        }
        Ok(Self {
            name: name.into(),
            classes,
        })
    }

    /// The 21 Pascal VOC labels, background first.
    pub fn voc21() -> Self {
        Self {
            name: "voc21".into(),
            classes: VOC21.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Schema file format: first line `# <name>`, then one label per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# {}\n", self.name);
        for c in &self.classes {
            s.push_str(c);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let name = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Validation("schema file must start with '# <name>'".into()))?;
        let classes = lines.filter(|l| !l.is_empty()).map(str::to_string).collect();
        Self::new(name, classes)
    }
}
