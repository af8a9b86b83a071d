/** Tiny DOM construction helper — no templating framework needed. */

export interface ElOptions {
  className?: string;
  text?: string;
  attrs?: Record<string, string>;
  children?: (HTMLElement | string)[];
}

export function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  options: ElOptions = {},
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (options.className !== undefined) node.className = options.className;
  if (options.text !== undefined) node.textContent = options.text;
  if (options.attrs) {
    for (const [name, value] of Object.entries(options.attrs)) {
      node.setAttribute(name, value);
    }
  }
  if (options.children) {
    for (const child of options.children) {
      node.append(typeof child === "string" ? doc.createTextNode(child) : child);
    }
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
