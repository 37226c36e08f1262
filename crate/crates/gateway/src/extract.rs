use serde_json::{Deserializer, Map, Value};

/// First complete JSON object embedded in `text`, skipping prose, code
/// fences, and unbalanced braces before it.
pub fn extract_first_json_object(text: &str) -> Option<Map<String, Value>> {
    for (i, _) in text.match_indices('{') {
        let mut stream = Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}
