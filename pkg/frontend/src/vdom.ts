/** Minimal view tree. Views are plain objects so structure tests need no
 * DOM; `mount` turns a tree into real elements in the browser. */

export type Child = VNode | string;

export interface VNode {
  tag: string;
  props: Record<string, unknown>;
  children: Child[];
}

export function h(
  tag: string,
  props: Record<string, unknown> = {},
  ...children: (Child | Child[])[]
): VNode {
  return { tag, props, children: children.flat() };
}

export function findAll(root: Child, pred: (node: VNode) => boolean): VNode[] {
  if (typeof root === "string") return [];
  const hits: VNode[] = [];
  if (pred(root)) hits.push(root);
  for (const child of root.children) hits.push(...findAll(child, pred));
  return hits;
}

export function findByTag(root: Child, tag: string): VNode[] {
  return findAll(root, (node) => node.tag === tag);
}

export function findByClass(root: Child, className: string): VNode[] {
  return findAll(root, (node) =>
    String(node.props.class ?? "").split(/\s+/).includes(className)
  );
}

export function textContent(root: Child): string {
  if (typeof root === "string") return root;
  return root.children.map(textContent).join("");
}

export function mount(node: Child, doc: Document): Node {
  if (typeof node === "string") return doc.createTextNode(node);
  const element = doc.createElement(node.tag);
  for (const [key, value] of Object.entries(node.props)) {
    if (value !== undefined && value !== null) {
      element.setAttribute(key, String(value));
    }
  }
  for (const child of node.children) element.appendChild(mount(child, doc));
  return element;
}
