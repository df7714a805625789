use msti_core::Sample;

/// Judge instruction text with `{placeholder}` slots.
pub const JUDGE_TEMPLATE: &str = "Task: Evaluate a model's reasoning for Multimodal Sarcasm Detection. Be a STRICT judge. 5 is extremely rare.
[Inputs]
  1. Image
  2. Text: {text_input}
  3. Ground Truth: Label=[{gt_label}], Box(0-1000)=[{gt_boxes}], Words=[{gt_words}]
  4. Model Output: {model_response}
[Scoring 1-5]
  - V_Score (Visual): 1=hallucinated/missed GT box, 3=superficial, 5=perfectly identified GT objects.
  - R_Score (Reasoning): 1=wrong logic, 3=shallow textual analysis, 5=deep text-image contradiction analysis matching GT.
  - C_Score (Consistency): 1=conclusion contradicts reasoning, 5=perfectly aligned.
Output pure JSON only, no markdown, no explanations:
  {
    \"V\": <int>, \"R\": <int>, \"C\": <int>
  }";

/// Fills the template. Boxes are rendered as JSON arrays separated by `", "`.
pub fn build_judge_prompt(sample: &Sample, model_response: &str) -> String {
    let boxes = sample
        .visual_targets
        .iter()
        .map(|b| serde_json::to_string(b).expect("boxes serialize"))
        .collect::<Vec<_>>()
        .join(", ");
    // Single pass so placeholder-like text inside the inputs stays literal.
    let mut out = String::with_capacity(JUDGE_TEMPLATE.len() + model_response.len() + sample.text.len());
    let mut rest = JUDGE_TEMPLATE;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open..];
        let value = [
            ("{text_input}", sample.text.as_str()),
            ("{gt_label}", sample.label.as_str()),
            ("{gt_boxes}", boxes.as_str()),
            ("{gt_words}", sample.text_target.as_str()),
            ("{model_response}", model_response),
        ]
        .into_iter()
        .find(|(key, _)| after.starts_with(key));
        match value {
            Some((key, v)) => {
                out.push_str(v);
                rest = &after[key.len()..];
            }
            None => {
                out.push('{');
                rest = &after[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
